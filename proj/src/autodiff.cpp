#include "driftbench/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace driftbench {

namespace {

constexpr double kClampEps = 1e-12;

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.value()) +
                             " and " + shape_str(b.value()) + " differ");
    }
}

void require_vector(const Var& a, const char* op) {
    if (a.cols() != 1) {
        throw DimensionError(std::string(op) + ": expected a column vector, got " +
                             shape_str(a.value()));
    }
}

Eigen::VectorXd stable_softmax_vec(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

}  // namespace

std::string shape_str(const Mat& m) {
    std::ostringstream ss;
    ss << m.rows() << "x" << m.cols();
    return ss.str();
}

// ---------------------------------------------------------------------------
// ParameterStore
// ---------------------------------------------------------------------------
Mat& ParameterStore::create(const std::string& name, Mat init) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) throw ConfigError("parameter already exists: " + name);
    Entry& e = it->second;
    e.value = std::move(init);
    e.grad = Mat::Zero(e.value.rows(), e.value.cols());
    e.m = Mat::Zero(e.value.rows(), e.value.cols());
    e.v = Mat::Zero(e.value.rows(), e.value.cols());
    return e.value;
}

bool ParameterStore::contains(const std::string& name) const {
    return entries_.count(name) != 0;
}

Mat& ParameterStore::value(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second.value;
}

const Mat& ParameterStore::value(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second.value;
}

Mat& ParameterStore::grad(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second.grad;
}

const Mat& ParameterStore::grad(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second.grad;
}

void ParameterStore::zero_grads() {
    for (auto& [name, e] : entries_) e.grad.setZero();
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

size_t ParameterStore::coordinate_count() const {
    size_t n = 0;
    for (const auto& [name, e] : entries_) n += static_cast<size_t>(e.value.size());
    return n;
}

std::map<std::string, Mat> ParameterStore::snapshot_values() const {
    std::map<std::string, Mat> snap;
    for (const auto& [name, e] : entries_) snap.emplace(name, e.value);
    return snap;
}

void ParameterStore::restore_values(const std::map<std::string, Mat>& snap) {
    for (const auto& [name, m] : snap) value(name) = m;
}

void adam_step(ParameterStore& params, const AdamConfig& cfg) {
    params.adam_t_ += 1;
    const double t = static_cast<double>(params.adam_t_);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& [name, e] : params.entries_) {
        e.m = cfg.beta1 * e.m + (1.0 - cfg.beta1) * e.grad;
        e.v = cfg.beta2 * e.v + (1.0 - cfg.beta2) * e.grad.cwiseProduct(e.grad);
        e.value.array() -= cfg.lr * (e.m.array() / bc1) /
                           ((e.v.array() / bc2).sqrt() + cfg.eps);
        e.grad.setZero();
    }
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------
const Mat& Var::value() const { return tape->value(idx); }

Var Tape::input(Mat value) {
    Node n;
    n.owned = std::move(value);
    n.grad = Mat::Zero(n.owned.rows(), n.owned.cols());
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(ParameterStore& store, const std::string& name) {
    auto key = std::make_pair(static_cast<const ParameterStore*>(&store), name);
    auto it = param_cache_.find(key);
    if (it != param_cache_.end()) return Var{this, it->second};
    const Mat& v = store.value(name);
    Node n;
    n.external = &v;
    n.grad = Mat::Zero(v.rows(), v.cols());
    nodes_.push_back(std::move(n));
    const int idx = static_cast<int>(nodes_.size()) - 1;
    bindings_.push_back(Binding{idx, &store, name});
    param_cache_.emplace(key, idx);
    return Var{this, idx};
}

Var Tape::make(Mat value, std::vector<int> parents,
               std::function<void(Tape&, int)> back) {
    assert(value.allFinite());
    Node n;
    n.owned = std::move(value);
    n.grad = Mat::Zero(n.owned.rows(), n.owned.cols());
    n.parents = std::move(parents);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(const Var& loss) {
    if (backward_done_) throw Error("backward already run on this tape");
    if (loss.tape != this) throw Error("loss var belongs to another tape");
    const Mat& lv = value(loss.idx);
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw DimensionError("backward: loss must be 1x1, got " + shape_str(lv));
    }
    nodes_[static_cast<size_t>(loss.idx)].grad(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        auto& node = nodes_[static_cast<size_t>(i)];
        if (node.back) node.back(*this, i);
    }
    for (const Binding& b : bindings_) {
        b.store->grad(b.name) += nodes_[static_cast<size_t>(b.node)].grad;
    }
    backward_done_ = true;
}

const Mat& Tape::value(int idx) const {
    const Node& n = nodes_[static_cast<size_t>(idx)];
    return n.external ? *n.external : n.owned;
}

Mat& Tape::grad(int idx) { return nodes_[static_cast<size_t>(idx)].grad; }
const Mat& Tape::grad(int idx) const { return nodes_[static_cast<size_t>(idx)].grad; }

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------
Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    return a.tape->make(a.value() + b.value(), {a.idx, b.idx},
                        [a, b](Tape& t, int self) {
                            t.grad(a.idx) += t.grad(self);
                            t.grad(b.idx) += t.grad(self);
                        });
}

Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    return a.tape->make(a.value() - b.value(), {a.idx, b.idx},
                        [a, b](Tape& t, int self) {
                            t.grad(a.idx) += t.grad(self);
                            t.grad(b.idx) -= t.grad(self);
                        });
}

Var scale(Var a, double c) {
    return a.tape->make(c * a.value(), {a.idx}, [a, c](Tape& t, int self) {
        t.grad(a.idx) += c * t.grad(self);
    });
}

Var hadamard(Var a, Var b) {
    require_same_shape(a, b, "hadamard");
    return a.tape->make(a.value().cwiseProduct(b.value()), {a.idx, b.idx},
                        [a, b](Tape& t, int self) {
                            t.grad(a.idx) += t.grad(self).cwiseProduct(t.value(b.idx));
                            t.grad(b.idx) += t.grad(self).cwiseProduct(t.value(a.idx));
                        });
}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + shape_str(a.value()) + " * " +
                             shape_str(b.value()));
    }
    return a.tape->make(a.value() * b.value(), {a.idx, b.idx},
                        [a, b](Tape& t, int self) {
                            t.grad(a.idx) += t.grad(self) * t.value(b.idx).transpose();
                            t.grad(b.idx) += t.value(a.idx).transpose() * t.grad(self);
                        });
}

Var transpose(Var a) {
    return a.tape->make(a.value().transpose(), {a.idx}, [a](Tape& t, int self) {
        t.grad(a.idx) += t.grad(self).transpose();
    });
}

Var affine(Var x, Var w, Var b) {
    if (w.cols() != x.rows() || b.rows() != w.rows() || b.cols() != 1) {
        throw DimensionError("affine: W " + shape_str(w.value()) + ", x " +
                             shape_str(x.value()) + ", b " + shape_str(b.value()));
    }
    Mat y = w.value() * x.value();
    y.colwise() += b.value().col(0);
    return x.tape->make(std::move(y), {x.idx, w.idx, b.idx},
                        [x, w, b](Tape& t, int self) {
                            const Mat& g = t.grad(self);
                            t.grad(w.idx) += g * t.value(x.idx).transpose();
                            t.grad(x.idx) += t.value(w.idx).transpose() * g;
                            t.grad(b.idx) += g.rowwise().sum();
                        });
}

Var relu(Var x) {
    return x.tape->make(x.value().cwiseMax(0.0), {x.idx}, [x](Tape& t, int self) {
        // Subgradient at 0 is 0.
        t.grad(x.idx).array() +=
            t.grad(self).array() * (t.value(self).array() > 0.0).cast<double>();
    });
}

Var softmax(Var x) {
    Mat y;
    if (x.cols() == 1) {
        y = stable_softmax_vec(x.value().col(0));
    } else {
        y.resize(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            y.row(r) = stable_softmax_vec(x.value().row(r).transpose()).transpose();
        }
    }
    const bool vector_mode = x.cols() == 1;
    return x.tape->make(std::move(y), {x.idx}, [x, vector_mode](Tape& t, int self) {
        const Mat& s = t.value(self);
        const Mat& g = t.grad(self);
        if (vector_mode) {
            const double dot = (g.array() * s.array()).sum();
            t.grad(x.idx).array() += s.array() * (g.array() - dot);
        } else {
            for (Eigen::Index r = 0; r < s.rows(); ++r) {
                const double dot = g.row(r).dot(s.row(r));
                t.grad(x.idx).row(r).array() +=
                    s.row(r).array() * (g.row(r).array() - dot);
            }
        }
    });
}

Var softmax_cols(Var x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        y.col(c) = stable_softmax_vec(x.value().col(c));
    }
    return x.tape->make(std::move(y), {x.idx}, [x](Tape& t, int self) {
        const Mat& s = t.value(self);
        const Mat& g = t.grad(self);
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            const double dot = g.col(c).dot(s.col(c));
            t.grad(x.idx).col(c).array() += s.col(c).array() * (g.col(c).array() - dot);
        }
    });
}

Var concat(Var a, Var b) {
    require_vector(a, "concat");
    require_vector(b, "concat");
    Mat y(a.rows() + b.rows(), 1);
    if (a.rows() > 0) y.topRows(a.rows()) = a.value();
    if (b.rows() > 0) y.bottomRows(b.rows()) = b.value();
    const Eigen::Index na = a.rows();
    const Eigen::Index nb = b.rows();
    return a.tape->make(std::move(y), {a.idx, b.idx},
                        [a, b, na, nb](Tape& t, int self) {
                            if (na > 0) t.grad(a.idx) += t.grad(self).topRows(na);
                            if (nb > 0) t.grad(b.idx) += t.grad(self).bottomRows(nb);
                        });
}

Var mean_rows(Var x) {
    const Eigen::Index rows = x.rows();
    Mat y = x.value().colwise().mean().transpose();
    return x.tape->make(std::move(y), {x.idx}, [x, rows](Tape& t, int self) {
        const Eigen::RowVectorXd gr =
            t.grad(self).col(0).transpose() / static_cast<double>(rows);
        t.grad(x.idx).rowwise() += gr;
    });
}

Var gather_rows(Var table, const std::vector<int>& rows) {
    Mat y(static_cast<Eigen::Index>(rows.size()), table.cols());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= table.rows()) {
            throw DimensionError("gather_rows: index out of range");
        }
        y.row(static_cast<Eigen::Index>(i)) = table.value().row(rows[i]);
    }
    return table.tape->make(std::move(y), {table.idx},
                            [table, rows](Tape& t, int self) {
                                const Mat& g = t.grad(self);
                                for (size_t i = 0; i < rows.size(); ++i) {
                                    t.grad(table.idx).row(rows[i]) +=
                                        g.row(static_cast<Eigen::Index>(i));
                                }
                            });
}

Var sum(const std::vector<Var>& xs) {
    if (xs.empty()) throw DimensionError("sum: empty operand list");
    Mat y = xs[0].value();
    for (size_t i = 1; i < xs.size(); ++i) {
        require_same_shape(xs[0], xs[i], "sum");
        y += xs[i].value();
    }
    std::vector<int> parents;
    parents.reserve(xs.size());
    for (const Var& v : xs) parents.push_back(v.idx);
    return xs[0].tape->make(std::move(y), std::move(parents),
                            [xs](Tape& t, int self) {
                                for (const Var& v : xs) t.grad(v.idx) += t.grad(self);
                            });
}

Var cross_entropy(Var pred, int target) {
    require_vector(pred, "cross_entropy");
    if (target < 0 || target >= pred.rows()) {
        throw DimensionError("cross_entropy: target " + std::to_string(target) +
                             " out of range for " + std::to_string(pred.rows()) +
                             " classes");
    }
    Vec one_hot = Vec::Zero(pred.rows());
    one_hot(target) = 1.0;
    return cross_entropy(pred, one_hot);
}

Var cross_entropy(Var pred, const Vec& one_hot) {
    require_vector(pred, "cross_entropy");
    if (one_hot.size() != pred.rows()) {
        throw DimensionError("cross_entropy: target length " +
                             std::to_string(one_hot.size()) + " vs " +
                             std::to_string(pred.rows()) + " classes");
    }
    const double total = pred.value().sum();
    if (std::abs(total - 1.0) > 1e-6 || pred.value().minCoeff() < -1e-9) {
        throw Error("cross_entropy: pred is not a probability vector (sum " +
                    std::to_string(total) + ")");
    }
    const Eigen::ArrayXd p = pred.value().col(0).array();
    const Eigen::ArrayXd pc = p.max(kClampEps).min(1.0 - kClampEps);
    const Eigen::ArrayXd y = one_hot.array();
    const double loss = -(y * pc.log() + (1.0 - y) * (1.0 - pc).log()).sum();
    Mat out(1, 1);
    out(0, 0) = loss;
    return pred.tape->make(std::move(out), {pred.idx},
                           [pred, one_hot](Tape& t, int self) {
                               const double g = t.grad(self)(0, 0);
                               const Eigen::ArrayXd p = t.value(pred.idx).col(0).array();
                               const Eigen::ArrayXd y = one_hot.array();
                               const Eigen::ArrayXd inside =
                                   ((p > kClampEps) && (p < 1.0 - kClampEps))
                                       .cast<double>();
                               const Eigen::ArrayXd pc =
                                   p.max(kClampEps).min(1.0 - kClampEps);
                               t.grad(pred.idx).col(0).array() +=
                                   g * inside * (-y / pc + (1.0 - y) / (1.0 - pc));
                           });
}

Var gaussian_sample(Var mu, Var log_sigma, const Mat& noise) {
    require_same_shape(mu, log_sigma, "gaussian_sample");
    if (noise.rows() != mu.rows() || noise.cols() != mu.cols()) {
        throw DimensionError("gaussian_sample: noise " + shape_str(noise) + " vs mu " +
                             shape_str(mu.value()));
    }
    Mat y = (mu.value().array() + log_sigma.value().array().exp() * noise.array())
                .matrix();
    return mu.tape->make(std::move(y), {mu.idx, log_sigma.idx},
                         [mu, log_sigma, noise](Tape& t, int self) {
                             const Mat& g = t.grad(self);
                             t.grad(mu.idx) += g;
                             t.grad(log_sigma.idx).array() +=
                                 g.array() * t.value(log_sigma.idx).array().exp() *
                                 noise.array();
                         });
}

Var kl_standard_normal(Var mu, Var log_sigma) {
    require_same_shape(mu, log_sigma, "kl_standard_normal");
    const Eigen::ArrayXXd m = mu.value().array();
    const Eigen::ArrayXXd ls = log_sigma.value().array();
    const double kl = 0.5 * (m.square() + (2.0 * ls).exp() - 1.0 - 2.0 * ls).sum();
    Mat out(1, 1);
    out(0, 0) = kl;
    return mu.tape->make(std::move(out), {mu.idx, log_sigma.idx},
                         [mu, log_sigma](Tape& t, int self) {
                             const double g = t.grad(self)(0, 0);
                             t.grad(mu.idx) += g * t.value(mu.idx);
                             t.grad(log_sigma.idx).array() +=
                                 g * ((2.0 * t.value(log_sigma.idx).array()).exp() - 1.0);
                         });
}

Var bow_affine(Var w, Var b, const BowVector& v) {
    return bow_affine(w, b, std::span<const BowVector>(&v, 1));
}

Var bow_affine(Var w, Var b, std::span<const BowVector> batch) {
    if (batch.empty()) throw DimensionError("bow_affine: empty batch");
    if (b.rows() != w.rows() || b.cols() != 1) {
        throw DimensionError("bow_affine: W " + shape_str(w.value()) + ", b " +
                             shape_str(b.value()));
    }
    for (const BowVector& v : batch) {
        if (v.dimension != w.cols()) {
            throw DimensionError("bow_affine: bow dimension " +
                                 std::to_string(v.dimension) + " vs W " +
                                 shape_str(w.value()));
        }
    }
    Mat y(w.rows(), static_cast<Eigen::Index>(batch.size()));
    for (size_t j = 0; j < batch.size(); ++j) {
        Vec col = b.value().col(0);
        for (const auto& [i, c] : batch[j].counts) col += c * w.value().col(i);
        y.col(static_cast<Eigen::Index>(j)) = col;
    }
    std::vector<BowVector> docs(batch.begin(), batch.end());
    return w.tape->make(std::move(y), {w.idx, b.idx},
                        [w, b, docs](Tape& t, int self) {
                            const Mat& g = t.grad(self);
                            t.grad(b.idx) += g.rowwise().sum();
                            for (size_t j = 0; j < docs.size(); ++j) {
                                const auto jc = static_cast<Eigen::Index>(j);
                                for (const auto& [i, c] : docs[j].counts) {
                                    t.grad(w.idx).col(i) += c * g.col(jc);
                                }
                            }
                        });
}

Var bow_nll(Var logits, const BowVector& counts) {
    return bow_nll(logits, std::span<const BowVector>(&counts, 1));
}

Var bow_nll(Var logits, std::span<const BowVector> batch) {
    if (static_cast<size_t>(logits.cols()) != batch.size()) {
        throw DimensionError("bow_nll: " + std::to_string(batch.size()) +
                             " documents vs logits " + shape_str(logits.value()));
    }
    double loss = 0.0;
    for (size_t j = 0; j < batch.size(); ++j) {
        if (batch[j].dimension != logits.rows()) {
            throw DimensionError("bow_nll: bow dimension " +
                                 std::to_string(batch[j].dimension) + " vs logits " +
                                 shape_str(logits.value()));
        }
        const auto jc = static_cast<Eigen::Index>(j);
        const Vec x = logits.value().col(jc);
        const double m = x.maxCoeff();
        const double lse = m + std::log((x.array() - m).exp().sum());
        double dot = 0.0;
        for (const auto& [i, c] : batch[j].counts) dot += c * x(i);
        loss += batch[j].total() * lse - dot;
    }
    Mat out(1, 1);
    out(0, 0) = loss;
    std::vector<BowVector> docs(batch.begin(), batch.end());
    return logits.tape->make(
        std::move(out), {logits.idx}, [logits, docs](Tape& t, int self) {
            const double g = t.grad(self)(0, 0);
            for (size_t j = 0; j < docs.size(); ++j) {
                const auto jc = static_cast<Eigen::Index>(j);
                const Vec s = stable_softmax_vec(t.value(logits.idx).col(jc));
                t.grad(logits.idx).col(jc) += g * docs[j].total() * s;
                for (const auto& [i, c] : docs[j].counts) {
                    t.grad(logits.idx)(i, jc) -= g * c;
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------
FdResult finite_difference_check(const std::function<double()>& loss_fn,
                                 ParameterStore& params, double step) {
    params.zero_grads();
    loss_fn();
    std::map<std::string, Mat> tape_grads;
    for (const std::string& name : params.names()) {
        tape_grads.emplace(name, params.grad(name));
    }
    FdResult result;
    for (const std::string& name : params.names()) {
        Mat& value = params.value(name);
        const Mat& g = tape_grads.at(name);
        for (Eigen::Index r = 0; r < value.rows(); ++r) {
            for (Eigen::Index c = 0; c < value.cols(); ++c) {
                const double saved = value(r, c);
                value(r, c) = saved + step;
                const double fp = loss_fn();
                value(r, c) = saved - step;
                const double fm = loss_fn();
                value(r, c) = saved;
                const double fd = (fp - fm) / (2.0 * step);
                const double rel = std::abs(fd - g(r, c)) /
                                   std::max(1e-8, std::abs(fd) + std::abs(g(r, c)));
                if (rel > result.max_rel_error) {
                    result.max_rel_error = rel;
                    result.worst_coordinate = name + "(" + std::to_string(r) + "," +
                                              std::to_string(c) + ")";
                }
            }
        }
    }
    params.zero_grads();
    return result;
}

}  // namespace driftbench
