#include "cian/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace cian {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace {

std::size_t shape_product(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void validate_shape(const Shape& s) {
    if (s.empty() || s.size() > 2)
        throw DimensionError("tensor rank must be 1 or 2, got shape " + shape_str(s));
    for (std::size_t d : s)
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(s));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor::Tensor(Shape shape, bool requires_grad) {
    validate_shape(shape);
    impl_ = std::make_shared<TensorImpl>();
    impl_->data.assign(shape_product(shape), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    Tensor t({1}, requires_grad);
    t.data()[0] = v;
    return t;
}

Tensor Tensor::vec(std::vector<double> v, bool requires_grad) {
    if (v.empty()) throw DimensionError("vec: empty data");
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl>();
    t.impl_->shape = {v.size()};
    t.impl_->data = std::move(v);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::mat(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    std::size_t r = rows.size();
    if (r == 0) throw DimensionError("mat: empty data");
    std::size_t c = rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("mat: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return from({r, c}, std::move(data), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    validate_shape(shape);
    if (shape_product(shape) != data.size())
        throw DimensionError("from: shape " + shape_str(shape) + " does not match data length " +
                             std::to_string(data.size()));
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::zeros_like(const Tensor& t) { return Tensor(t.shape(), false); }

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape), true);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows: tensor is not rank 2");
    return impl_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols: tensor is not rank 2");
    return impl_->shape[1];
}

double Tensor::value() const {
    if (size() != 1) throw InvariantError("value: tensor has " + std::to_string(size()) + " entries");
    return impl_->data[0];
}

const std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) throw InvariantError("grad: no gradient present");
    return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::backward(const Tensor& loss) {
    if (backward_run_)
        throw InvariantError("backward already run on this tape; call reset() first");
    if (!loss.defined() || loss.size() != 1)
        throw InvariantError("backward: loss must be a defined scalar tensor");
    auto& g = loss.impl()->grad_ref();
    g[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    backward_run_ = true;
}

void Tape::reset() {
    ops_.clear();
    backward_run_ = false;
}

// ---------------------------------------------------------------------------
// Broadcast machinery for binary elementwise ops
// ---------------------------------------------------------------------------

namespace {

struct BcastPlan {
    // modulus for indexing each operand; 0 means index directly
    std::size_t a_mod = 0;
    std::size_t b_mod = 0;
    const Tensor* big = nullptr;
};

BcastPlan resolve_broadcast(const Tensor& a, const Tensor& b, const char* opname) {
    BcastPlan p;
    if (a.shape() == b.shape()) {
        p.big = &a;
    } else if (b.size() == 1) {
        p.big = &a;
        p.b_mod = 1;
    } else if (a.size() == 1) {
        p.big = &b;
        p.a_mod = 1;
    } else if (b.rank() == 1 && b.shape()[0] == a.shape().back()) {
        p.big = &a;
        p.b_mod = b.size();
    } else if (a.rank() == 1 && a.shape()[0] == b.shape().back()) {
        p.big = &b;
        p.a_mod = a.size();
    } else {
        throw DimensionError(std::string(opname) + ": shapes " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()) + " are not broadcastable");
    }
    return p;
}

template <class F, class DA, class DB>
Tensor binary_op(Tape& tape, const Tensor& a, const Tensor& b, const char* name,
                 F f, DA dfda, DB dfdb) {
    BcastPlan p = resolve_broadcast(a, b, name);
    Tensor out(p.big->shape(), a.requires_grad() || b.requires_grad());
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) {
        std::size_t ja = p.a_mod ? i % p.a_mod : i;
        std::size_t jb = p.b_mod ? i % p.b_mod : i;
        od[i] = f(ad[ja], bd[jb]);
    }
    if (out.requires_grad()) {
        auto ai = a.payload(), bi = b.payload(), oi = out.payload();
        std::size_t am = p.a_mod, bm = p.b_mod;
        tape.record([ai, bi, oi, am, bm, dfda, dfdb]() {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            double* ga = ai->requires_grad ? ai->grad_ref().data() : nullptr;
            double* gb = bi->requires_grad ? bi->grad_ref().data() : nullptr;
            const double* ad = ai->data.data();
            const double* bd = bi->data.data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::size_t ja = am ? i % am : i;
                std::size_t jb = bm ? i % bm : i;
                if (ga) ga[ja] += g[i] * dfda(ad[ja], bd[jb]);
                if (gb) gb[jb] += g[i] * dfdb(ad[ja], bd[jb]);
            }
        });
    }
    return out;
}

template <class F, class DF>
Tensor unary_op(Tape& tape, const Tensor& x, F f, DF dfdx) {
    Tensor out(x.shape(), x.requires_grad());
    const auto& xd = x.data();
    auto& od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = f(xd[i]);
    if (out.requires_grad()) {
        auto xi = x.payload(), oi = out.payload();
        tape.record([xi, oi, dfdx]() {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            auto& gx = xi->grad_ref();
            for (std::size_t i = 0; i < g.size(); ++i)
                gx[i] += g[i] * dfdx(xi->data[i], oi->data[i]);
        });
    }
    return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary_op(tape, a, b, "add",
                     [](double x, double y) { return x + y; },
                     [](double, double) { return 1.0; },
                     [](double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary_op(tape, a, b, "sub",
                     [](double x, double y) { return x - y; },
                     [](double, double) { return 1.0; },
                     [](double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    return binary_op(tape, a, b, "mul",
                     [](double x, double y) { return x * y; },
                     [](double, double y) { return y; },
                     [](double x, double) { return x; });
}

Tensor tanh(Tape& tape, const Tensor& x) {
    return unary_op(tape, x, [](double v) { return std::tanh(v); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    return unary_op(tape, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary_op(tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(Tape& tape, const Tensor& x) {
    return unary_op(tape, x, [](double v) { return std::abs(v); },
                    [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() == 1 && b.rank() == 1)
        throw DimensionError("matmul: both operands rank 1 (shapes " + shape_str(a.shape()) +
                             ", " + shape_str(b.shape()) + "); use dot");
    std::size_t m = a.rank() == 2 ? a.rows() : 1;
    std::size_t ka = a.rank() == 2 ? a.cols() : a.size();
    std::size_t kb = b.rank() == 2 ? b.rows() : b.size();
    std::size_t n = b.rank() == 2 ? b.cols() : 1;
    if (ka != kb)
        throw DimensionError("matmul: inner dimensions disagree, shapes " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    const std::size_t k = ka;

    Shape out_shape;
    if (a.rank() == 2 && b.rank() == 2) out_shape = {m, n};
    else if (a.rank() == 2) out_shape = {m};  // matrix * vector
    else out_shape = {n};                     // vector * matrix

    Tensor out(out_shape, a.requires_grad() || b.requires_grad());
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* od = out.data().data();
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < k; ++q) acc += ad[p * k + q] * bd[q * n + j];
            od[p * n + j] = acc;
        }
    }
    if (out.requires_grad()) {
        auto ai = a.payload(), bi = b.payload(), oi = out.payload();
        tape.record([ai, bi, oi, m, k, n]() {
            if (oi->grad.empty()) return;
            const double* g = oi->grad.data();
            const double* ad = ai->data.data();
            const double* bd = bi->data.data();
            if (ai->requires_grad) {
                double* ga = ai->grad_ref().data();
                for (std::size_t p = 0; p < m; ++p)
                    for (std::size_t q = 0; q < k; ++q) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += g[p * n + j] * bd[q * n + j];
                        ga[p * k + q] += acc;
                    }
            }
            if (bi->requires_grad) {
                double* gb = bi->grad_ref().data();
                for (std::size_t q = 0; q < k; ++q)
                    for (std::size_t j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (std::size_t p = 0; p < m; ++p) acc += ad[p * k + q] * g[p * n + j];
                        gb[q * n + j] += acc;
                    }
            }
        });
    }
    return out;
}

Tensor affine(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b) {
    return add(tape, matmul(tape, w, x), b);
}

// ---------------------------------------------------------------------------
// conv1d_narrow
// ---------------------------------------------------------------------------

Tensor conv1d_narrow(Tape& tape, const Tensor& c, const Tensor& filter, const Tensor& bias) {
    if (c.rank() != 2 || filter.rank() != 2)
        throw DimensionError("conv1d_narrow: expected rank-2 input and filter, got " +
                             shape_str(c.shape()) + " and " + shape_str(filter.shape()));
    if (bias.size() != 1) throw DimensionError("conv1d_narrow: bias must be a scalar");
    const std::size_t d = c.rows();
    const std::size_t l = c.cols();
    const std::size_t w = filter.cols();
    if (filter.rows() != d)
        throw DimensionError("conv1d_narrow: channel dims disagree, input " + shape_str(c.shape()) +
                             " vs filter " + shape_str(filter.shape()));
    if (w > l)
        throw WordTooShortError("conv1d_narrow: filter width " + std::to_string(w) +
                                " exceeds word length " + std::to_string(l));

    const std::size_t out_len = l - w + 1;
    Tensor out({out_len}, c.requires_grad() || filter.requires_grad() || bias.requires_grad());
    const double* cd = c.data().data();
    const double* hd = filter.data().data();
    const double b0 = bias.data()[0];
    for (std::size_t i = 0; i < out_len; ++i) {
        double acc = b0;
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t j = 0; j < w; ++j) acc += cd[r * l + i + j] * hd[r * w + j];
        out.data()[i] = std::tanh(acc);
    }
    if (out.requires_grad()) {
        auto ci = c.payload(), hi = filter.payload(), bi = bias.payload(), oi = out.payload();
        tape.record([ci, hi, bi, oi, d, l, w, out_len]() {
            if (oi->grad.empty()) return;
            const double* g = oi->grad.data();
            const double* y = oi->data.data();
            const double* cd = ci->data.data();
            const double* hd = hi->data.data();
            double* gc = ci->requires_grad ? ci->grad_ref().data() : nullptr;
            double* gh = hi->requires_grad ? hi->grad_ref().data() : nullptr;
            double* gb = bi->requires_grad ? bi->grad_ref().data() : nullptr;
            for (std::size_t i = 0; i < out_len; ++i) {
                const double dpre = g[i] * (1.0 - y[i] * y[i]);
                if (dpre == 0.0) continue;
                for (std::size_t r = 0; r < d; ++r)
                    for (std::size_t j = 0; j < w; ++j) {
                        if (gc) gc[r * l + i + j] += dpre * hd[r * w + j];
                        if (gh) gh[r * w + j] += dpre * cd[r * l + i + j];
                    }
                if (gb) gb[0] += dpre;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// max_over_time, softmax
// ---------------------------------------------------------------------------

Tensor max_over_time(Tape& tape, const Tensor& f) {
    if (!f.defined() || f.rank() != 1 || f.size() == 0)
        throw DimensionError("max_over_time: expected a non-empty rank-1 tensor");
    std::size_t arg = 0;
    double best = f.data()[0];
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f.data()[i] > best) {  // strict: ties keep the first occurrence
            best = f.data()[i];
            arg = i;
        }
    Tensor out = Tensor::scalar(best, f.requires_grad());
    if (out.requires_grad()) {
        auto fi = f.payload(), oi = out.payload();
        tape.record([fi, oi, arg]() {
            if (oi->grad.empty()) return;
            fi->grad_ref()[arg] += oi->grad[0];
        });
    }
    return out;
}

Tensor softmax(Tape& tape, const Tensor& x) {
    if (x.rank() != 1) throw DimensionError("softmax: expected rank-1 tensor");
    const std::size_t n = x.size();
    double m = x.data()[0];
    for (double v : x.data()) m = std::max(m, v);
    Tensor out({n}, x.requires_grad());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.data()[i] = std::exp(x.data()[i] - m);
        s += out.data()[i];
    }
    for (std::size_t i = 0; i < n; ++i) out.data()[i] /= s;
    if (out.requires_grad()) {
        auto xi = x.payload(), oi = out.payload();
        tape.record([xi, oi, n]() {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            const auto& y = oi->data;
            double gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) gy += g[j] * y[j];
            auto& gx = xi->grad_ref();
            for (std::size_t i = 0; i < n; ++i) gx[i] += y[i] * (g[i] - gy);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// concat / split
// ---------------------------------------------------------------------------

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    const std::size_t rank = parts[0].rank();
    if (axis >= rank) throw DimensionError("concat: axis out of range");
    bool rg = false;
    std::size_t along = 0;
    for (const auto& p : parts) {
        if (p.rank() != rank)
            throw DimensionError("concat: mixed ranks " + shape_str(parts[0].shape()) + " vs " +
                                 shape_str(p.shape()));
        for (std::size_t d = 0; d < rank; ++d)
            if (d != axis && p.shape()[d] != parts[0].shape()[d])
                throw DimensionError("concat: side dimensions disagree, " +
                                     shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
        along += p.shape()[axis];
        rg = rg || p.requires_grad();
    }
    Shape out_shape = parts[0].shape();
    out_shape[axis] = along;
    Tensor out(out_shape, rg);

    // copy_block(part, offset): placement of one part within out
    const std::size_t out_cols = rank == 2 ? out_shape[1] : 0;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        if (rank == 1 || axis == 0) {
            std::copy(p.data().begin(), p.data().end(), out.data().begin() + offset);
            offset += p.size();
        } else {  // rank 2, axis 1
            const std::size_t pr = p.rows(), pc = p.cols();
            for (std::size_t r = 0; r < pr; ++r)
                std::copy(p.data().begin() + r * pc, p.data().begin() + (r + 1) * pc,
                          out.data().begin() + r * out_cols + offset);
            offset += pc;
        }
    }
    if (rg) {
        std::vector<std::shared_ptr<TensorImpl>> ins;
        for (const auto& p : parts) ins.push_back(p.payload());
        auto oi = out.payload();
        tape.record([ins, oi, rank, axis, out_cols]() {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            std::size_t offset = 0;
            for (const auto& pi : ins) {
                const std::size_t psz = pi->data.size();
                if (rank == 1 || axis == 0) {
                    if (pi->requires_grad) {
                        auto& gp = pi->grad_ref();
                        for (std::size_t i = 0; i < psz; ++i) gp[i] += g[offset + i];
                    }
                    offset += psz;
                } else {
                    const std::size_t pc = pi->shape[1], pr = pi->shape[0];
                    if (pi->requires_grad) {
                        auto& gp = pi->grad_ref();
                        for (std::size_t r = 0; r < pr; ++r)
                            for (std::size_t c0 = 0; c0 < pc; ++c0)
                                gp[r * pc + c0] += g[r * out_cols + offset + c0];
                    }
                    offset += pc;
                }
            }
        });
    }
    return out;
}

std::vector<Tensor> split(Tape& tape, const Tensor& x, const std::vector<std::size_t>& sizes,
                          std::size_t axis) {
    const std::size_t rank = x.rank();
    if (axis >= rank) throw DimensionError("split: axis out of range");
    std::size_t total = 0;
    for (std::size_t s : sizes) {
        if (s == 0) throw DimensionError("split: zero-sized piece");
        total += s;
    }
    if (total != x.shape()[axis])
        throw DimensionError("split: sizes sum to " + std::to_string(total) + ", axis has " +
                             std::to_string(x.shape()[axis]));

    std::vector<Tensor> out;
    const std::size_t xc = rank == 2 ? x.cols() : 0;
    std::size_t offset = 0;
    for (std::size_t s : sizes) {
        Shape sh = x.shape();
        sh[axis] = s;
        Tensor piece(sh, x.requires_grad());
        if (rank == 1 || axis == 0) {
            std::copy(x.data().begin() + offset, x.data().begin() + offset + piece.size(),
                      piece.data().begin());
            if (piece.requires_grad()) {
                auto xi = x.payload(), pi = piece.payload();
                std::size_t off = offset;
                tape.record([xi, pi, off]() {
                    if (pi->grad.empty()) return;
                    auto& gx = xi->grad_ref();
                    for (std::size_t i = 0; i < pi->grad.size(); ++i) gx[off + i] += pi->grad[i];
                });
            }
            offset += piece.size();
        } else {  // rank 2, axis 1
            const std::size_t pr = x.rows();
            for (std::size_t r = 0; r < pr; ++r)
                std::copy(x.data().begin() + r * xc + offset,
                          x.data().begin() + r * xc + offset + s, piece.data().begin() + r * s);
            if (piece.requires_grad()) {
                auto xi = x.payload(), pi = piece.payload();
                std::size_t off = offset;
                tape.record([xi, pi, off, s, xc, pr]() {
                    if (pi->grad.empty()) return;
                    auto& gx = xi->grad_ref();
                    for (std::size_t r = 0; r < pr; ++r)
                        for (std::size_t c0 = 0; c0 < s; ++c0)
                            gx[r * xc + off + c0] += pi->grad[r * s + c0];
                });
            }
            offset += s;
        }
        out.push_back(std::move(piece));
    }
    return out;
}

// ---------------------------------------------------------------------------
// dropout, cross_entropy
// ---------------------------------------------------------------------------

Tensor dropout(Tape& tape, const Tensor& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    if (mode == Mode::eval || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    Tensor out(x.shape(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) {
        (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        out.data()[i] = x.data()[i] * (*mask)[i];
    }
    if (out.requires_grad()) {
        auto xi = x.payload(), oi = out.payload();
        tape.record([xi, oi, mask]() {
            if (oi->grad.empty()) return;
            auto& gx = xi->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1) throw DimensionError("cross_entropy: expected rank-1 logits");
    const std::size_t n = logits.size();
    if (label >= n)
        throw DataError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                        std::to_string(n) + " classes");
    double m = logits.data()[0];
    for (double v : logits.data()) m = std::max(m, v);
    double s = 0.0;
    auto probs = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        (*probs)[i] = std::exp(logits.data()[i] - m);
        s += (*probs)[i];
    }
    for (std::size_t i = 0; i < n; ++i) (*probs)[i] /= s;
    const double loss = (m + std::log(s)) - logits.data()[label];
    Tensor out = Tensor::scalar(loss, logits.requires_grad());
    if (out.requires_grad()) {
        auto xi = logits.payload(), oi = out.payload();
        tape.record([xi, oi, probs, label]() {
            if (oi->grad.empty()) return;
            const double g = oi->grad[0];
            auto& gx = xi->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i)
                gx[i] += g * ((*probs)[i] - (i == label ? 1.0 : 0.0));
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// sum, dot, scale, lookups
// ---------------------------------------------------------------------------

Tensor sum(Tape& tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor out = Tensor::scalar(s, x.requires_grad());
    if (out.requires_grad()) {
        auto xi = x.payload(), oi = out.payload();
        tape.record([xi, oi]() {
            if (oi->grad.empty()) return;
            auto& gx = xi->grad_ref();
            for (double& v : gx) v += oi->grad[0];
        });
    }
    return out;
}

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size())
        throw DimensionError("dot: expected equal-length rank-1 tensors, got " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    Tensor out = Tensor::scalar(s, a.requires_grad() || b.requires_grad());
    if (out.requires_grad()) {
        auto ai = a.payload(), bi = b.payload(), oi = out.payload();
        tape.record([ai, bi, oi]() {
            if (oi->grad.empty()) return;
            const double g = oi->grad[0];
            if (ai->requires_grad) {
                auto& ga = ai->grad_ref();
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bi->data[i];
            }
            if (bi->requires_grad) {
                auto& gb = bi->grad_ref();
                for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * ai->data[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape& tape, const Tensor& x, double k) {
    Tensor out(x.shape(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * k;
    if (out.requires_grad()) {
        auto xi = x.payload(), oi = out.payload();
        tape.record([xi, oi, k]() {
            if (oi->grad.empty()) return;
            auto& gx = xi->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += oi->grad[i] * k;
        });
    }
    return out;
}

Tensor take_row(Tape& tape, const Tensor& table, std::size_t row) {
    if (table.rank() != 2) throw DimensionError("take_row: expected rank-2 table");
    if (row >= table.rows())
        throw DimensionError("take_row: row " + std::to_string(row) + " out of range for " +
                             shape_str(table.shape()));
    const std::size_t c = table.cols();
    Tensor out({c}, table.requires_grad());
    std::copy(table.data().begin() + row * c, table.data().begin() + (row + 1) * c,
              out.data().begin());
    if (out.requires_grad()) {
        auto ti = table.payload(), oi = out.payload();
        tape.record([ti, oi, row, c]() {
            if (oi->grad.empty()) return;
            auto& gt = ti->grad_ref();
            for (std::size_t j = 0; j < c; ++j) gt[row * c + j] += oi->grad[j];
        });
    }
    return out;
}

Tensor embed_columns(Tape& tape, const Tensor& table, const std::vector<int>& indices,
                     std::size_t l_max, int skip_row) {
    if (table.rank() != 2) throw DimensionError("embed_columns: expected rank-2 table");
    const std::size_t rows = table.rows();
    const std::size_t d = table.cols();
    const std::size_t used = std::min(indices.size(), l_max);
    for (std::size_t j = 0; j < used; ++j)
        if (indices[j] < 0 || static_cast<std::size_t>(indices[j]) >= rows)
            throw DimensionError("embed_columns: index " + std::to_string(indices[j]) +
                                 " out of range for " + shape_str(table.shape()));
    Tensor out({d, l_max}, table.requires_grad());
    for (std::size_t j = 0; j < used; ++j) {
        const std::size_t row = static_cast<std::size_t>(indices[j]);
        for (std::size_t r = 0; r < d; ++r) out.data()[r * l_max + j] = table.data()[row * d + r];
    }
    if (out.requires_grad()) {
        auto ti = table.payload(), oi = out.payload();
        auto idx = std::make_shared<std::vector<int>>(indices.begin(), indices.begin() + used);
        tape.record([ti, oi, idx, d, l_max, skip_row]() {
            if (oi->grad.empty()) return;
            auto& gt = ti->grad_ref();
            for (std::size_t j = 0; j < idx->size(); ++j) {
                const int row = (*idx)[j];
                if (row == skip_row) continue;
                for (std::size_t r = 0; r < d; ++r)
                    gt[static_cast<std::size_t>(row) * d + r] += oi->grad[r * l_max + j];
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(NamedParams params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), 0.0);
        v_.emplace_back(p.tensor.size(), 0.0);
    }
}

void Adam::step() {
    for (const auto& p : params_)
        if (!p.tensor.has_grad())
            throw InvariantError("adam: missing gradient for parameter '" + p.name + "'");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& x = params_[k].tensor.data();
        const auto& g = params_[k].tensor.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            x[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
        params_[k].tensor.zero_grad();
    }
}

// ---------------------------------------------------------------------------
// finite_diff_check
// ---------------------------------------------------------------------------

double finite_diff_check(const std::function<Tensor(Tape&)>& fn, Tensor input, double eps) {
    if (!input.defined() || !input.requires_grad())
        throw InvariantError("finite_diff_check: input must be defined and require gradients");
    input.zero_grad();
    {
        Tape tape;
        Tensor out = fn(tape);
        if (out.size() != 1) throw InvariantError("finite_diff_check: fn must be scalar-valued");
        tape.backward(out);
    }
    const std::vector<double> analytic = input.grad();
    auto eval = [&fn]() {
        Tape t;
        return fn(t).value();
    };
    double max_err = 0.0;
    auto& x = input.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double fp = eval();
        x[i] = orig - eps;
        const double fm = eval();
        x[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace cian
