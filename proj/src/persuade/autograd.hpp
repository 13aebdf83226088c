// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "persuade/tensor.hpp"

namespace persuade {

/// A learnable tensor and its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode differentiation over dense matrices. Nodes are appended in
/// evaluation order, which is already a topological order for backward().
class Tape {
public:
    /// With `record_gradients` false, parameters enter as constants and no
    /// backward closures are kept (inference mode).
    explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// A value that receives no gradient.
    Var constant(Matrix value);
    /// A leaf whose gradient is accumulated into `p.grad` by backward().
    /// On a recording tape the caller must own `p` mutably.
    Var param(const Parameter& p);

    /// Seeds d(out)/d(out) = 1 for a 1x1 `out` and propagates to parameters.
    void backward(Var out);

    const Matrix& value(int id) const { return nodes_[id].ref ? *nodes_[id].ref : nodes_[id].value; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Internal API used by the op implementations.
    using BackwardFn = std::function<void(Tape&, int self)>;
    Var push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
    Var push(Matrix value, std::span<const Var> inputs, BackwardFn fn);
    const Matrix& grad(int id) const { return nodes_[id].grad; }
    void accumulate(int id, const Matrix& g);
    template <class Expr>
    void accumulate_expr(int id, const Expr& g) {
        auto& n = nodes_[id];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) n.grad = g;
        else n.grad += g;
    }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

private:
    struct Node {
        Matrix value;
        const Matrix* ref = nullptr;
        Matrix grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };
    bool record_ = true;
    // deque: references returned by value() stay valid as nodes are appended.
    std::deque<Node> nodes_;
};

// Dense ops. Shapes follow the usual conventions; mismatches throw ShapeError.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a [1, n] row over every row of a
Var add_constant(Var a, const Matrix& c);
Var scale(Var a, double s);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// Row-wise layer normalisation with learned gain/bias rows [1, n].
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Row-wise softmax. With `causal`, entry (i, j) for j > i is excluded.
Var softmax_rows(Var a, bool causal = false);
Var col_slice(Var a, Eigen::Index start, Eigen::Index n);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
/// Inverted dropout; identity when p == 0.
Var dropout(Var a, double p, std::mt19937_64& rng);
/// Rows of `table` selected by `ids`.
Var gather_rows(Var table, std::span<const int> ids);
Var add_scalars(Var a, Var b);

/// Probability clamp applied before taking logs in the losses.
inline constexpr double kProbEpsilon = 1e-7;

/// Mean over classes of binary cross-entropy between sigmoid(logits) and y.
/// `logits` and `y` are [1, P]. Probabilities are clamped to [eps, 1-eps].
Var bce_with_logits(Var logits, const Matrix& y);
/// Focal variant; gamma = 0 reduces to bce_with_logits.
Var focal_with_logits(Var logits, const Matrix& y, double gamma);
/// Mean over rows of softmax cross-entropy; logits [T, V], targets size T.
Var cross_entropy_rows(Var logits, std::span<const int> targets);

}  // namespace persuade
