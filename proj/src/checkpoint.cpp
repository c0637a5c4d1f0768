#include "driftbench/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <string>

#include "driftbench/errors.hpp"
#include "driftbench/io_util.hpp"

namespace driftbench {

namespace {

constexpr char kMagic[8] = {'D', 'B', 'T', 'E', 'N', 'S', 'R', '1'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::string& data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw ParseError("truncated checkpoint file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        }
        pos += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_tensors(const std::string& path, const std::map<std::string, Mat>& tensors) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out.append(name);
        put_u64(out, static_cast<uint64_t>(m.rows()));
        put_u64(out, static_cast<uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                put_f64(out, m(r, c));
            }
        }
    }
    atomic_write_file(path, out);
}

std::map<std::string, Mat> load_tensors(const std::string& path) {
    const std::string data = read_file(path);
    Reader r{data};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw ParseError("bad checkpoint magic in " + path);
    }
    const uint32_t count = r.u32();
    std::map<std::string, Mat> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        const auto rows = static_cast<Eigen::Index>(r.u64());
        const auto cols = static_cast<Eigen::Index>(r.u64());
        Mat m(rows, cols);
        for (Eigen::Index rr = 0; rr < rows; ++rr) {
            for (Eigen::Index cc = 0; cc < cols; ++cc) {
                m(rr, cc) = r.f64();
            }
        }
        tensors.emplace(name, std::move(m));
    }
    if (r.pos != data.size()) throw ParseError("trailing bytes in " + path);
    return tensors;
}

void save_parameters(const std::string& path, const ParameterStore& params) {
    std::map<std::string, Mat> tensors;
    for (const std::string& name : params.names()) {
        tensors.emplace(name, params.value(name));
    }
    save_tensors(path, tensors);
}

void load_parameters(const std::string& path, ParameterStore& params) {
    for (auto& [name, m] : load_tensors(path)) {
        params.create(name, std::move(m));
    }
}

}  // namespace driftbench
