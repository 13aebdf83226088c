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

#include "persuade/autograd.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "persuade/error.hpp"

namespace persuade {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.requires_grad = record_;
    n.param = record_ ? const_cast<Parameter*>(&p) : nullptr;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Matrix value, std::span<const Var> inputs, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    for (const Var& v : inputs) n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var out) {
    if (out.tape != this) throw InvalidArgumentError("backward: variable from another tape");
    if (value(out.id).size() != 1) throw ShapeError("backward: output must be 1x1");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[out.id].grad = Matrix::Ones(1, 1);
    for (int i = out.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param) {
            if (n.param->grad.size() == 0) n.param->grad = Matrix::Zero(n.param->value.rows(), n.param->value.cols());
            n.param->grad += n.grad;
        }
    }
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeError(std::string(op) + ": [" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + "] vs [" +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + "]");
}

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    if (A.cols() != B.rows()) shape_fail("matmul", A, B);
    return a.tape->push(A * B, {a, b}, [a, b](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.requires_grad(a.id)) t.accumulate_expr(a.id, g * t.value(b.id).transpose());
        if (t.requires_grad(b.id)) t.accumulate_expr(b.id, t.value(a.id).transpose() * g);
    });
}

Var add(Var a, Var b) {
    const Matrix& A = a.value();
    const Matrix& B = b.value();
    if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("add", A, B);
    return a.tape->push(A + B, {a, b}, [a, b](Tape& t, int self) {
        t.accumulate(a.id, t.grad(self));
        t.accumulate(b.id, t.grad(self));
    });
}

Var add_row(Var a, Var row) {
    const Matrix& A = a.value();
    const Matrix& R = row.value();
    if (R.rows() != 1 || R.cols() != A.cols()) shape_fail("add_row", A, R);
    Matrix out = A;
    out.rowwise() += R.row(0);
    return a.tape->push(std::move(out), {a, row}, [a, row](Tape& t, int self) {
        t.accumulate(a.id, t.grad(self));
        if (t.requires_grad(row.id)) t.accumulate_expr(row.id, t.grad(self).colwise().sum());
    });
}

Var add_constant(Var a, const Matrix& c) {
    const Matrix& A = a.value();
    if (A.rows() != c.rows() || A.cols() != c.cols()) shape_fail("add_constant", A, c);
    return a.tape->push(A + c, {a}, [a](Tape& t, int self) { t.accumulate(a.id, t.grad(self)); });
}

Var scale(Var a, double s) {
    return a.tape->push(a.value() * s, {a},
                        [a, s](Tape& t, int self) { t.accumulate_expr(a.id, t.grad(self) * s); });
}

Var transpose(Var a) {
    return a.tape->push(a.value().transpose(), {a},
                        [a](Tape& t, int self) { t.accumulate_expr(a.id, t.grad(self).transpose()); });
}

Var relu(Var a) {
    Matrix out = a.value().cwiseMax(0.0);
    return a.tape->push(std::move(out), {a}, [a](Tape& t, int self) {
        const Matrix& x = t.value(a.id);
        t.accumulate_expr(a.id, t.grad(self).cwiseProduct((x.array() > 0.0).cast<double>().matrix()));
    });
}

Var sigmoid(Var a) {
    Matrix out = a.value().unaryExpr([](double z) { return stable_sigmoid(z); });
    return a.tape->push(std::move(out), {a}, [a](Tape& t, int self) {
        const Matrix& y = t.value(self);
        t.accumulate_expr(a.id, (t.grad(self).array() * y.array() * (1.0 - y.array())).matrix());
    });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    const Matrix& X = x.value();
    const Matrix& G = gain.value();
    const Matrix& B = bias.value();
    if (G.rows() != 1 || G.cols() != X.cols()) shape_fail("layer_norm gain", X, G);
    if (B.rows() != 1 || B.cols() != X.cols()) shape_fail("layer_norm bias", X, B);
    const Eigen::Index n = X.cols();
    Matrix xhat(X.rows(), n);
    Vector inv_std(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const double mu = X.row(r).mean();
        const double var = (X.row(r).array() - mu).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (X.row(r).array() - mu) * inv_std(r);
    }
    Matrix out = xhat.array().rowwise() * G.row(0).array();
    out.rowwise() += B.row(0);
    return x.tape->push(std::move(out), {x, gain, bias},
                        [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, int self) {
                            const Matrix& g = t.grad(self);
                            if (t.requires_grad(gain.id))
                                t.accumulate_expr(gain.id, g.cwiseProduct(xhat).colwise().sum());
                            if (t.requires_grad(bias.id)) t.accumulate_expr(bias.id, g.colwise().sum());
                            if (!t.requires_grad(x.id)) return;
                            const Matrix& G = t.value(gain.id);
                            Matrix dxhat = g.array().rowwise() * G.row(0).array();
                            Matrix dx(dxhat.rows(), dxhat.cols());
                            for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                                const double m1 = dxhat.row(r).mean();
                                const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                                dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
                            }
                            t.accumulate(x.id, dx);
                        });
}

Var softmax_rows(Var a, bool causal) {
    const Matrix& A = a.value();
    Matrix out = Matrix::Zero(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const Eigen::Index width = causal ? std::min<Eigen::Index>(r + 1, A.cols()) : A.cols();
        const double mx = A.row(r).head(width).maxCoeff();
        auto e = (A.row(r).head(width).array() - mx).exp();
        out.row(r).head(width) = e / e.sum();
    }
    return a.tape->push(std::move(out), {a}, [a](Tape& t, int self) {
        const Matrix& y = t.value(self);
        const Matrix& g = t.grad(self);
        Vector dots = (g.cwiseProduct(y)).rowwise().sum();
        Matrix dx = y.array() * (g.array().colwise() - dots.array());
        t.accumulate(a.id, dx);
    });
}

Var col_slice(Var a, Eigen::Index start, Eigen::Index n) {
    const Matrix& A = a.value();
    if (start < 0 || start + n > A.cols()) throw ShapeError("col_slice: range out of bounds");
    return a.tape->push(A.middleCols(start, n), {a}, [a, start, n](Tape& t, int self) {
        if (!t.requires_grad(a.id)) return;
        const Matrix& x = t.value(a.id);
        Matrix g = Matrix::Zero(x.rows(), x.cols());
        g.middleCols(start, n) = t.grad(self);
        t.accumulate(a.id, g);
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const Eigen::Index rows = parts[0].rows();
    Eigen::Index cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
        cols += p.cols();
    }
    Matrix out(rows, cols);
    Eigen::Index c = 0;
    for (const Var& p : parts) {
        out.middleCols(c, p.cols()) = p.value();
        c += p.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts[0].tape->push(std::move(out), parts, [inputs](Tape& t, int self) {
        Eigen::Index c = 0;
        for (const Var& p : inputs) {
            const Eigen::Index w = t.value(p.id).cols();
            if (t.requires_grad(p.id)) t.accumulate_expr(p.id, t.grad(self).middleCols(c, w));
            c += w;
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const Eigen::Index cols = parts[0].cols();
    Eigen::Index rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols && p.rows() > 0) shape_fail("concat_rows", parts[0].value(), p.value());
        rows += p.rows();
    }
    Matrix out(rows, cols);
    Eigen::Index r = 0;
    for (const Var& p : parts) {
        if (p.rows() > 0) out.middleRows(r, p.rows()) = p.value();
        r += p.rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts[0].tape->push(std::move(out), parts, [inputs](Tape& t, int self) {
        Eigen::Index r = 0;
        for (const Var& p : inputs) {
            const Eigen::Index h = t.value(p.id).rows();
            if (h > 0 && t.requires_grad(p.id)) t.accumulate_expr(p.id, t.grad(self).middleRows(r, h));
            r += h;
        }
    });
}

Var dropout(Var a, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return a;
    if (p >= 1.0) throw InvalidArgumentError("dropout: p must be < 1");
    const Matrix& A = a.value();
    std::bernoulli_distribution keep(1.0 - p);
    Matrix mask(A.rows(), A.cols());
    const double s = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0;
    Matrix out = A.cwiseProduct(mask);
    return a.tape->push(std::move(out), {a}, [a, mask = std::move(mask)](Tape& t, int self) {
        t.accumulate_expr(a.id, t.grad(self).cwiseProduct(mask));
    });
}

Var gather_rows(Var table, std::span<const int> ids) {
    const Matrix& T = table.value();
    Matrix out(static_cast<Eigen::Index>(ids.size()), T.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= T.rows())
            throw VocabError("token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                             std::to_string(T.rows()));
        out.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
    }
    std::vector<int> idx(ids.begin(), ids.end());
    return table.tape->push(std::move(out), {table}, [table, idx = std::move(idx)](Tape& t, int self) {
        if (!t.requires_grad(table.id)) return;
        const Matrix& T = t.value(table.id);
        Matrix g = Matrix::Zero(T.rows(), T.cols());
        const Matrix& go = t.grad(self);
        for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
        t.accumulate(table.id, g);
    });
}

Var add_scalars(Var a, Var b) {
    if (a.value().size() != 1 || b.value().size() != 1) shape_fail("add_scalars", a.value(), b.value());
    Matrix out(1, 1);
    out(0, 0) = a.value()(0, 0) + b.value()(0, 0);
    return a.tape->push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
        t.accumulate(a.id, t.grad(self));
        t.accumulate(b.id, t.grad(self));
    });
}

Var bce_with_logits(Var logits, const Matrix& y) { return focal_with_logits(logits, y, 0.0); }

Var focal_with_logits(Var logits, const Matrix& y, double gamma) {
    const Matrix& Z = logits.value();
    if (Z.rows() != y.rows() || Z.cols() != y.cols()) shape_fail("bce", Z, y);
    const double n = static_cast<double>(Z.size());
    constexpr double eps = kProbEpsilon;
    Matrix dz(Z.rows(), Z.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < Z.size(); ++i) {
        const double p = stable_sigmoid(Z.data()[i]);
        const double pc = std::clamp(p, eps, 1.0 - eps);
        const double yi = y.data()[i];
        const bool clamped = p <= eps || p >= 1.0 - eps;
        if (gamma == 0.0) {
            loss += -(yi * std::log(pc) + (1.0 - yi) * std::log(1.0 - pc));
            dz.data()[i] = clamped ? 0.0 : (p - yi) / n;
        } else {
            const double a1 = std::pow(1.0 - pc, gamma);
            const double a0 = std::pow(pc, gamma);
            loss += -(yi * a1 * std::log(pc) + (1.0 - yi) * a0 * std::log(1.0 - pc));
            if (clamped) {
                dz.data()[i] = 0.0;
            } else {
                const double d1 = gamma * std::pow(1.0 - pc, gamma - 1.0) * std::log(pc) - a1 / pc;
                const double d0 = -gamma * std::pow(pc, gamma - 1.0) * std::log(1.0 - pc) + a0 / (1.0 - pc);
                dz.data()[i] = (yi * d1 + (1.0 - yi) * d0) * p * (1.0 - p) / n;
            }
        }
    }
    Matrix out(1, 1);
    out(0, 0) = loss / n;
    return logits.tape->push(std::move(out), {logits}, [logits, dz = std::move(dz)](Tape& t, int self) {
        t.accumulate_expr(logits.id, dz * t.grad(self)(0, 0));
    });
}

Var cross_entropy_rows(Var logits, std::span<const int> targets) {
    const Matrix& Z = logits.value();
    if (static_cast<std::size_t>(Z.rows()) != targets.size())
        throw ShapeError("cross_entropy_rows: " + std::to_string(Z.rows()) + " rows vs " +
                         std::to_string(targets.size()) + " targets");
    if (Z.rows() == 0) throw ShapeError("cross_entropy_rows: no rows");
    const double T = static_cast<double>(Z.rows());
    Matrix dz(Z.rows(), Z.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
        const int tgt = targets[static_cast<std::size_t>(r)];
        if (tgt < 0 || tgt >= Z.cols()) throw VocabError("target id " + std::to_string(tgt) + " outside vocabulary");
        const double mx = Z.row(r).maxCoeff();
        auto e = (Z.row(r).array() - mx).exp();
        const double s = e.sum();
        loss += std::log(s) + mx - Z(r, tgt);
        dz.row(r) = e / s;
        dz(r, tgt) -= 1.0;
    }
    dz /= T;
    Matrix out(1, 1);
    out(0, 0) = loss / T;
    return logits.tape->push(std::move(out), {logits}, [logits, dz = std::move(dz)](Tape& t, int self) {
        t.accumulate_expr(logits.id, dz * t.grad(self)(0, 0));
    });
}

}  // namespace persuade
