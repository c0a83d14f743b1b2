#pragma once

// Dense float64 tensors (rank 1 or 2) with reverse-mode automatic
// differentiation on an explicit tape, the Adam optimizer, and a central
// finite-difference gradient oracle. Everything learnable in the model is
// built from the primitives here.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "cian/error.hpp"
#include "cian/rng.hpp"

namespace cian {

enum class Mode { train, eval };

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until gradient actually flows here
    bool requires_grad = false;

    // Lazily sized to data.size() and zero-filled on first access.
    std::vector<double>& grad_ref() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

// Value handle over a shared payload. Copies alias the same storage, which is
// what siamese weight sharing relies on.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, bool requires_grad = false);

    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor vec(std::vector<double> v, bool requires_grad = false);
    static Tensor mat(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor zeros_like(const Tensor& t);
    // uniform(lo, hi) entries, trainable; draws size() values from rng in row-major order
    static Tensor uniform(Shape shape, Rng& rng, double lo = -0.05, double hi = 0.05);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->data.size(); }
    std::size_t rows() const;  // rank-2 only
    std::size_t cols() const;  // rank-2 only

    double value() const;                       // size-1 tensors
    double at(std::size_t i) const { return impl_->data[i]; }
    double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }
    bool has_grad() const { return !impl_->grad.empty(); }
    const std::vector<double>& grad() const;  // throws if no gradient present
    void zero_grad();                         // allocates if needed, fills with 0
    void clear_grad() { impl_->grad.clear(); }

    TensorImpl* impl() const { return impl_.get(); }
    std::shared_ptr<TensorImpl> payload() const { return impl_; }

    // true when both handles point at the same storage
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

struct NamedParam {
    std::string name;
    Tensor tensor;
};
using NamedParams = std::vector<NamedParam>;

// Ordered record of executed operations. Execution is eager, so inputs always
// precede their consumers. backward() walks the record once, in reverse; a
// second call without reset() is an error.
class Tape {
public:
    void record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }
    void backward(const Tensor& loss);
    void reset();
    std::size_t size() const { return ops_.size(); }
    bool backward_run() const { return backward_run_; }

private:
    std::vector<std::function<void()>> ops_;
    bool backward_run_ = false;
};

// ---------------------------------------------------------------------------
// Operations. Binary elementwise ops accept equal shapes, a rank-1 vector
// broadcast over the other operand's last axis, or a size-1 scalar.
// ---------------------------------------------------------------------------

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor tanh(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
Tensor abs(Tape& tape, const Tensor& x);

// [m×k]·[k×n] -> [m×n]; also [m×k]·[k] -> [m] and [k]·[k×n] -> [n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// matmul(W, x) + b
Tensor affine(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b);

// out[i] = tanh(<c[*, i:i+w-1], filter> + bias), narrow: output length l-w+1
Tensor conv1d_narrow(Tape& tape, const Tensor& c, const Tensor& filter, const Tensor& bias);

// max over a rank-1 tensor; gradient routes to the first (lowest-index) argmax
Tensor max_over_time(Tape& tape, const Tensor& f);

// numerically stable via max subtraction; outputs sum to 1
Tensor softmax(Tape& tape, const Tensor& x);

// parts joined along axis (0 or, for rank-2, 1); backward slices the gradient
Tensor concat(Tape& tape, const std::vector<Tensor>& parts, std::size_t axis = 0);

// inverse of concat: sizes along axis must sum to the dimension there
std::vector<Tensor> split(Tape& tape, const Tensor& x, const std::vector<std::size_t>& sizes,
                          std::size_t axis = 0);

// inverted dropout: train mode zeroes entries w.p. rate and scales survivors
// by 1/(1-rate); eval mode is the identity
Tensor dropout(Tape& tape, const Tensor& x, double rate, Mode mode, Rng& rng);

// -log softmax(logits)[label]; gradient is softmax(logits) - onehot(label)
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

Tensor sum(Tape& tape, const Tensor& x);                      // -> [1]
Tensor dot(Tape& tape, const Tensor& a, const Tensor& b);     // [n]·[n] -> [1]
Tensor scale(Tape& tape, const Tensor& x, double k);          // constant multiple

// row i of a rank-2 table as a vector; backward scatters into that row
Tensor take_row(Tape& tape, const Tensor& table, std::size_t row);

// [d×l_max] whose column j is table row indices[j] (j < indices.size()),
// zero otherwise. Rows equal to skip_row receive no gradient, which pins the
// shared zero row used for padding and out-of-alphabet characters.
Tensor embed_columns(Tape& tape, const Tensor& table, const std::vector<int>& indices,
                     std::size_t l_max, int skip_row);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(NamedParams params, AdamConfig cfg = {});

    // Bias-corrected update; requires every parameter to carry a gradient and
    // zeroes all gradients afterwards.
    void step();

    std::size_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    NamedParams params_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
    AdamConfig cfg_;
};

// ---------------------------------------------------------------------------
// Gradient oracle: max over entries of
//   |analytic - central difference| / max(1, |analytic|).
// fn must rebuild the same scalar-valued graph from the current contents of
// input on each call; callers keep inputs away from relu/max kinks.
// ---------------------------------------------------------------------------

double finite_diff_check(const std::function<Tensor(Tape&)>& fn, Tensor input,
                         double eps = 1e-5);

}  // namespace cian
