#pragma once

#include <map>
#include <string>

#include "driftbench/autodiff.hpp"

namespace driftbench {

// Binary named-tensor container: magic "DBTENSR1", then a u32 tensor count,
// then per tensor a u32 name length, the name bytes, u64 rows, u64 cols and
// rows*cols doubles in row-major order. All integers and floats are
// little-endian regardless of host.
void save_tensors(const std::string& path, const std::map<std::string, Mat>& tensors);
std::map<std::string, Mat> load_tensors(const std::string& path);

void save_parameters(const std::string& path, const ParameterStore& params);
// Creates every tensor found in the file as a parameter.
void load_parameters(const std::string& path, ParameterStore& params);

}  // namespace driftbench
