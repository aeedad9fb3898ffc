#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "medgraph/common.hpp"

namespace mg {

// Dense row-major matrix of doubles. Row vectors are 1 x c, scalars 1 x 1.
struct Tensor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols) throw ShapeMismatchError("Tensor: data length != rows*cols");
    }

    static Tensor row(std::vector<double> d) {
        std::size_t n = d.size();
        return Tensor(1, n, std::move(d));
    }
    static Tensor scalar(double x) { return Tensor(1, 1, {x}); }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// Define-by-run tape. Every op appends a record whose backward closure adds
// into the input gradients; `backward()` walks the records in reverse.
class Tape {
public:
    struct Var {
        std::size_t id = static_cast<std::size_t>(-1);
        bool valid() const { return id != static_cast<std::size_t>(-1); }
    };

    Var leaf(Tensor value) { return push(std::move(value), {}, nullptr); }
    // Constants take no gradient; their grad buffer exists but is ignored.
    Var constant(Tensor value) { return leaf(std::move(value)); }

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // ---- ops ----

    Var matmul(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.cols != B.rows) throw ShapeMismatchError("matmul: inner dims differ");
        Tensor out(A.rows, B.cols);
        mm(A.data.data(), B.data.data(), out.data.data(), A.rows, A.cols, B.cols, false, false);
        return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
            const Tensor& A = t.nodes_[n.inputs[0].id].value;
            const Tensor& B = t.nodes_[n.inputs[1].id].value;
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            Tensor& gB = t.nodes_[n.inputs[1].id].grad;
            // gA += gOut * B^T ; gB += A^T * gOut
            mm(n.grad.data.data(), B.data.data(), gA.data.data(), A.rows, B.cols, A.cols, false, true);
            mm(A.data.data(), n.grad.data.data(), gB.data.data(), A.cols, A.rows, B.cols, true, false);
        });
    }

    // Same-shape addition, or matrix + broadcast row vector (1 x c).
    Var add(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.same_shape(B)) {
            Tensor out = A;
            for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
            return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
                t.accumulate(n.inputs[0], n.grad);
                t.accumulate(n.inputs[1], n.grad);
            });
        }
        if (B.rows == 1 && B.cols == A.cols) {
            Tensor out = A;
            for (std::size_t r = 0; r < A.rows; ++r)
                for (std::size_t c = 0; c < A.cols; ++c) out.at(r, c) += B.at(0, c);
            return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
                t.accumulate(n.inputs[0], n.grad);
                Tensor& gB = t.nodes_[n.inputs[1].id].grad;
                for (std::size_t r = 0; r < n.grad.rows; ++r)
                    for (std::size_t c = 0; c < n.grad.cols; ++c) gB.at(0, c) += n.grad.at(r, c);
            });
        }
        throw ShapeMismatchError("add: incompatible shapes");
    }

    Var mul_elementwise(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (!A.same_shape(B)) throw ShapeMismatchError("mul_elementwise: shape mismatch");
        Tensor out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
        return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
            const Tensor& A = t.nodes_[n.inputs[0].id].value;
            const Tensor& B = t.nodes_[n.inputs[1].id].value;
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            Tensor& gB = t.nodes_[n.inputs[1].id].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                gA.data[i] += n.grad.data[i] * B.data[i];
                gB.data[i] += n.grad.data[i] * A.data[i];
            }
        });
    }

    Var scale(Var a, double s) {
        Tensor out = value(a);
        for (auto& x : out.data) x *= s;
        return push(std::move(out), {a}, [s](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) gA.data[i] += s * n.grad.data[i];
        });
    }

    Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

    // Stack vertically: (r1 x c) over (r2 x c).
    Var concat_rows(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.cols != B.cols) throw ShapeMismatchError("concat_rows: column mismatch");
        Tensor out(A.rows + B.rows, A.cols);
        std::copy(A.data.begin(), A.data.end(), out.data.begin());
        std::copy(B.data.begin(), B.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(A.size()));
        return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            Tensor& gB = t.nodes_[n.inputs[1].id].grad;
            for (std::size_t i = 0; i < gA.size(); ++i) gA.data[i] += n.grad.data[i];
            for (std::size_t i = 0; i < gB.size(); ++i) gB.data[i] += n.grad.data[gA.size() + i];
        });
    }

    // Side-by-side: (r x c1) | (r x c2). Used for the joint readout.
    Var concat_cols(Var a, Var b) {
        const Tensor& A = value(a);
        const Tensor& B = value(b);
        if (A.rows != B.rows) throw ShapeMismatchError("concat_cols: row mismatch");
        Tensor out(A.rows, A.cols + B.cols);
        for (std::size_t r = 0; r < A.rows; ++r) {
            for (std::size_t c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c);
            for (std::size_t c = 0; c < B.cols; ++c) out.at(r, A.cols + c) = B.at(r, c);
        }
        return push(std::move(out), {a, b}, [](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            Tensor& gB = t.nodes_[n.inputs[1].id].grad;
            for (std::size_t r = 0; r < n.grad.rows; ++r) {
                for (std::size_t c = 0; c < gA.cols; ++c) gA.at(r, c) += n.grad.at(r, c);
                for (std::size_t c = 0; c < gB.cols; ++c) gB.at(r, c) += n.grad.at(r, gA.cols + c);
            }
        });
    }

    Var mean_all(Var a) {
        const Tensor& A = value(a);
        double s = 0.0;
        for (double x : A.data) s += x;
        double inv = 1.0 / static_cast<double>(A.size());
        return push(Tensor::scalar(s * inv), {a}, [inv](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (auto& g : gA.data) g += n.grad.data[0] * inv;
        });
    }

    Var sum_all(Var a) { return scale(mean_all(a), static_cast<double>(value(a).size())); }

    // Column-wise sum -> 1 x c row.
    Var sum_rows(Var a) {
        const Tensor& A = value(a);
        Tensor out(1, A.cols);
        for (std::size_t r = 0; r < A.rows; ++r)
            for (std::size_t c = 0; c < A.cols; ++c) out.at(0, c) += A.at(r, c);
        return push(std::move(out), {a}, [](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (std::size_t r = 0; r < gA.rows; ++r)
                for (std::size_t c = 0; c < gA.cols; ++c) gA.at(r, c) += n.grad.at(0, c);
        });
    }

    Var tanh_(Var a) {
        Tensor out = value(a);
        for (auto& x : out.data) x = std::tanh(x);
        return unary_from_output(out, a, [](double y) { return 1.0 - y * y; });
    }

    Var sigmoid(Var a) {
        Tensor out = value(a);
        for (auto& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
        return unary_from_output(out, a, [](double y) { return y * (1.0 - y); });
    }

    Var relu(Var a) {
        Tensor out = value(a);
        for (auto& x : out.data) x = x > 0.0 ? x : 0.0;
        return unary_from_output(out, a, [](double y) { return y > 0.0 ? 1.0 : 0.0; });
    }

    // log clamped at 1e-12 so saturated sigmoids never produce -inf.
    Var log_(Var a) {
        const Tensor& A = value(a);
        Tensor out = A;
        for (auto& x : out.data) x = std::log(x < 1e-12 ? 1e-12 : x);
        return push(std::move(out), {a}, [](Tape& t, Node& n) {
            const Tensor& A = t.nodes_[n.inputs[0].id].value;
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                double x = A.data[i] < 1e-12 ? 1e-12 : A.data[i];
                gA.data[i] += n.grad.data[i] / x;
            }
        });
    }

    // Row-wise max-subtracted softmax over entries with mask != 0; masked-out
    // entries emit 0, fully masked rows emit all zeros. `mask` is a constant.
    Var masked_row_softmax(Var a, const Tensor& mask) {
        const Tensor& A = value(a);
        if (!A.same_shape(mask)) throw ShapeMismatchError("masked_row_softmax: mask shape");
        Tensor out(A.rows, A.cols);
        for (std::size_t r = 0; r < A.rows; ++r) {
            double mx = -1e300;
            for (std::size_t c = 0; c < A.cols; ++c)
                if (mask.at(r, c) != 0.0 && A.at(r, c) > mx) mx = A.at(r, c);
            if (mx == -1e300) continue;  // empty row
            double denom = 0.0;
            for (std::size_t c = 0; c < A.cols; ++c)
                if (mask.at(r, c) != 0.0) denom += std::exp(A.at(r, c) - mx);
            for (std::size_t c = 0; c < A.cols; ++c)
                if (mask.at(r, c) != 0.0) out.at(r, c) = std::exp(A.at(r, c) - mx) / denom;
        }
        Tensor m = mask;
        return push(std::move(out), {a}, [m = std::move(m)](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            const Tensor& Y = n.value;
            for (std::size_t r = 0; r < Y.rows; ++r) {
                double dotv = 0.0;
                for (std::size_t c = 0; c < Y.cols; ++c)
                    if (m.at(r, c) != 0.0) dotv += n.grad.at(r, c) * Y.at(r, c);
                for (std::size_t c = 0; c < Y.cols; ++c)
                    if (m.at(r, c) != 0.0)
                        gA.at(r, c) += Y.at(r, c) * (n.grad.at(r, c) - dotv);
            }
        });
    }

    Var softmax_rows(Var a) {
        return masked_row_softmax(a, Tensor(value(a).rows, value(a).cols, 1.0));
    }

    // Scale row r of A by col[r]; `col` is (rows x 1).
    Var row_scale(Var a, Var col) {
        const Tensor& A = value(a);
        const Tensor& C = value(col);
        if (C.rows != A.rows || C.cols != 1) throw ShapeMismatchError("row_scale: need rows x 1 column");
        Tensor out = A;
        for (std::size_t r = 0; r < A.rows; ++r)
            for (std::size_t c = 0; c < A.cols; ++c) out.at(r, c) *= C.at(r, 0);
        return push(std::move(out), {a, col}, [](Tape& t, Node& n) {
            const Tensor& A = t.nodes_[n.inputs[0].id].value;
            const Tensor& C = t.nodes_[n.inputs[1].id].value;
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            Tensor& gC = t.nodes_[n.inputs[1].id].grad;
            for (std::size_t r = 0; r < A.rows; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < A.cols; ++c) {
                    gA.at(r, c) += n.grad.at(r, c) * C.at(r, 0);
                    acc += n.grad.at(r, c) * A.at(r, c);
                }
                gC.at(r, 0) += acc;
            }
        });
    }

    // Pick scattered entries of A into a (k x 1) column.
    Var gather(Var a, std::vector<std::pair<std::size_t, std::size_t>> idx) {
        const Tensor& A = value(a);
        Tensor out(idx.size(), 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i].first >= A.rows || idx[i].second >= A.cols)
                throw ShapeMismatchError("gather: index out of range");
            out.at(i, 0) = A.at(idx[i].first, idx[i].second);
        }
        return push(std::move(out), {a}, [idx = std::move(idx)](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (std::size_t i = 0; i < idx.size(); ++i)
                gA.at(idx[i].first, idx[i].second) += n.grad.at(i, 0);
        });
    }

    // Single entry as a 1 x 1 scalar.
    Var at(Var a, std::size_t r, std::size_t c) { return gather(a, {{r, c}}); }

    // ---- reverse pass ----

    void backward(Var loss) {
        const Tensor& L = value(loss);
        if (L.rows != 1 || L.cols != 1) throw ShapeMismatchError("backward: loss must be scalar");
        for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
        nodes_[loss.id].grad.data[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.backward) n.backward(*this, n);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<Var> inputs;
        std::function<void(Tape&, Node&)> backward;
    };

    Var push(Tensor value, std::vector<Var> inputs, std::function<void(Tape&, Node&)> bw) {
        Node n;
        n.grad = Tensor(value.rows, value.cols);
        n.value = std::move(value);
        n.inputs = std::move(inputs);
        n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    void accumulate(Var v, const Tensor& g) {
        Tensor& gv = nodes_[v.id].grad;
        for (std::size_t i = 0; i < gv.size(); ++i) gv.data[i] += g.data[i];
    }

    template <typename F>
    Var unary_from_output(const Tensor& out, Var a, F dydx_of_y) {
        return push(Tensor(out), {a}, [dydx_of_y](Tape& t, Node& n) {
            Tensor& gA = t.nodes_[n.inputs[0].id].grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                gA.data[i] += n.grad.data[i] * dydx_of_y(n.value.data[i]);
        });
    }

    // C += op(A) * op(B); plain triple loop, k-inner-friendly ordering.
    static void mm(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
                   std::size_t n, bool transA, bool transB) {
        if (!transA && !transB) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double a = A[i * k + p];
                    if (a == 0.0) continue;
                    const double* brow = B + p * n;
                    double* crow = C + i * n;
                    for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
                }
        } else if (!transA && transB) {
            // A: m x k, B: n x k (used as B^T)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    const double* arow = A + i * k;
                    const double* brow = B + j * k;
                    for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
                    C[i * n + j] += s;
                }
        } else if (transA && !transB) {
            // A: k x m (used as A^T), B: k x n; result m x n
            for (std::size_t p = 0; p < k; ++p) {
                const double* arow = A + p * m;
                const double* brow = B + p * n;
                for (std::size_t i = 0; i < m; ++i) {
                    double a = arow[i];
                    if (a == 0.0) continue;
                    double* crow = C + i * n;
                    for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
                }
            }
        } else {
            throw ShapeMismatchError("mm: double transpose unused");
        }
    }

    std::vector<Node> nodes_;

    friend struct TapeTestAccess;
};

using Var = Tape::Var;

// Central finite differences; the independent oracle for every gradient test.
inline std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double orig = params[i];
        params[i] = orig + h;
        double fp = f(params);
        params[i] = orig - h;
        double fm = f(params);
        params[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace mg
