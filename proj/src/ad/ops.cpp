#include "goku/ad/ops.hpp"

#include <cmath>

#include "goku/core/parallel.hpp"

namespace goku::ad {

namespace {

Graph& same_graph(Var a, Var b) {
    if (a.g != b.g) throw InvalidArgument("ad: operands belong to different graphs");
    return *a.g;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string("ad: shape mismatch in ") + op + ": " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Var affine(Var W, Var X, Var b) {
    Graph& g = same_graph(W, X);
    same_graph(X, b);
    if (W.cols() != X.rows() || b.rows() != W.rows() || b.cols() != 1)
        throw InvalidArgument("affine: inconsistent shapes");
    Mat y = W.value() * X.value();
    y.colwise() += b.value().col(0);
    const bool rg = W.requires_grad() || X.requires_grad() || b.requires_grad();
    const int w = W.id, x = X.id, bi = b.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [w, x, bi](Graph& gr, int self) {
        const Mat& dy = gr.grad(self);
        if (gr.requires_grad(w)) gr.accumulate(w, dy * gr.value(x).transpose());
        if (gr.requires_grad(x)) gr.accumulate(x, gr.value(w).transpose() * dy);
        if (gr.requires_grad(bi)) gr.accumulate(bi, dy.rowwise().sum());
    });
    return Var{&g, out};
}

Var matmul(Var A, Var B) {
    Graph& g = same_graph(A, B);
    if (A.cols() != B.rows()) throw InvalidArgument("matmul: inner dimensions differ");
    const bool rg = A.requires_grad() || B.requires_grad();
    const int a = A.id, b = B.id;
    int out = g.add(A.value() * B.value(), rg,
                    !rg ? Graph::BackwardFn{} : [a, b](Graph& gr, int self) {
                        const Mat& dy = gr.grad(self);
                        if (gr.requires_grad(a)) gr.accumulate(a, dy * gr.value(b).transpose());
                        if (gr.requires_grad(b)) gr.accumulate(b, gr.value(a).transpose() * dy);
                    });
    return Var{&g, out};
}

Var add(Var a, Var b) {
    Graph& g = same_graph(a, b);
    require_same_shape(a, b, "add");
    const bool rg = a.requires_grad() || b.requires_grad();
    const int ia = a.id, ib = b.id;
    int out = g.add(a.value() + b.value(), rg,
                    !rg ? Graph::BackwardFn{} : [ia, ib](Graph& gr, int self) {
                        const Mat& dy = gr.grad(self);
                        gr.accumulate(ia, dy);
                        gr.accumulate(ib, dy);
                    });
    return Var{&g, out};
}

Var sub(Var a, Var b) {
    Graph& g = same_graph(a, b);
    require_same_shape(a, b, "sub");
    const bool rg = a.requires_grad() || b.requires_grad();
    const int ia = a.id, ib = b.id;
    int out = g.add(a.value() - b.value(), rg,
                    !rg ? Graph::BackwardFn{} : [ia, ib](Graph& gr, int self) {
                        const Mat& dy = gr.grad(self);
                        gr.accumulate(ia, dy);
                        gr.accumulate(ib, -dy);
                    });
    return Var{&g, out};
}

Var hadamard(Var a, Var b) {
    Graph& g = same_graph(a, b);
    require_same_shape(a, b, "hadamard");
    const bool rg = a.requires_grad() || b.requires_grad();
    const int ia = a.id, ib = b.id;
    int out = g.add(a.value().cwiseProduct(b.value()), rg,
                    !rg ? Graph::BackwardFn{} : [ia, ib](Graph& gr, int self) {
                        const Mat& dy = gr.grad(self);
                        if (gr.requires_grad(ia)) gr.accumulate(ia, dy.cwiseProduct(gr.value(ib)));
                        if (gr.requires_grad(ib)) gr.accumulate(ib, dy.cwiseProduct(gr.value(ia)));
                    });
    return Var{&g, out};
}

Var scale(Var a, double c) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value() * c, rg,
                    !rg ? Graph::BackwardFn{} : [ia, c](Graph& gr, int self) {
                        gr.accumulate(ia, gr.grad(self) * c);
                    });
    return Var{&g, out};
}

Var sigmoid(Var a) {
    Graph& g = *a.g;
    Mat y = (1.0 + (-a.value().array()).exp()).inverse();
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
        const auto& s = gr.value(self).array();
        gr.accumulate(ia, (gr.grad(self).array() * s * (1.0 - s)).matrix());
    });
    return Var{&g, out};
}

Var tanh_op(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().array().tanh(), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        const auto& t = gr.value(self).array();
                        gr.accumulate(ia, (gr.grad(self).array() * (1.0 - t.square())).matrix());
                    });
    return Var{&g, out};
}

Var relu(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().cwiseMax(0.0), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        const auto mask = (gr.value(ia).array() > 0.0).cast<double>();
                        gr.accumulate(ia, (gr.grad(self).array() * mask).matrix());
                    });
    return Var{&g, out};
}

Var mish(Var a) {
    Graph& g = *a.g;
    const auto& x = a.value().array();
    // softplus with the large-argument branch to avoid exp overflow
    Mat sp = x.unaryExpr([](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); });
    Mat t = sp.array().tanh();
    Mat y = x * t.array();
    const bool rg = a.requires_grad();
    const int ia = a.id;
    Graph::BackwardFn bw;
    if (rg) {
        bw = [ia, t = std::move(t)](Graph& gr, int self) {
            const auto& x = gr.value(ia).array();
            const auto sig = (1.0 + (-x).exp()).inverse();
            const auto ta = t.array();
            gr.accumulate(ia,
                          (gr.grad(self).array() * (ta + x * (1.0 - ta.square()) * sig)).matrix());
        };
    }
    int out = g.add(std::move(y), rg, std::move(bw));
    return Var{&g, out};
}

Var exp_op(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().array().exp(), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        gr.accumulate(ia, gr.grad(self).cwiseProduct(gr.value(self)));
                    });
    return Var{&g, out};
}

Var square(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().array().square(), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        gr.accumulate(ia, 2.0 * gr.grad(self).cwiseProduct(gr.value(ia)));
                    });
    return Var{&g, out};
}

Var softmax_cols(Var a) {
    Graph& g = *a.g;
    Mat y = a.value();
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        auto col = y.col(c).array();
        col -= col.maxCoeff();
        col = col.exp();
        col /= col.sum();
    }
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
        const Mat& s = gr.value(self);
        const Mat& dy = gr.grad(self);
        Mat dx(s.rows(), s.cols());
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            const double dot = s.col(c).dot(dy.col(c));
            dx.col(c) = s.col(c).cwiseProduct(dy.col(c) - Mat::Constant(s.rows(), 1, dot));
        }
        gr.accumulate(ia, dx);
    });
    return Var{&g, out};
}

Var sum_all(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(Mat::Constant(1, 1, a.value().sum()), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        const double d = gr.grad(self)(0, 0);
                        const Mat& v = gr.value(ia);
                        gr.accumulate(ia, Mat::Constant(v.rows(), v.cols(), d));
                    });
    return Var{&g, out};
}

Var mean_all(Var a) {
    Graph& g = *a.g;
    const double n = static_cast<double>(a.value().size());
    if (n == 0) throw InvalidArgument("mean_all: empty operand");
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(Mat::Constant(1, 1, a.value().sum() / n), rg,
                    !rg ? Graph::BackwardFn{} : [ia, n](Graph& gr, int self) {
                        const double d = gr.grad(self)(0, 0) / n;
                        const Mat& v = gr.value(ia);
                        gr.accumulate(ia, Mat::Constant(v.rows(), v.cols(), d));
                    });
    return Var{&g, out};
}

Var sum_sq(Var a) {
    Graph& g = *a.g;
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(Mat::Constant(1, 1, a.value().squaredNorm()), rg,
                    !rg ? Graph::BackwardFn{} : [ia](Graph& gr, int self) {
                        gr.accumulate(ia, 2.0 * gr.grad(self)(0, 0) * gr.value(ia));
                    });
    return Var{&g, out};
}

Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
    Graph& g = *a.g;
    if (r0 < 0 || n < 0 || r0 + n > a.rows()) throw InvalidArgument("slice_rows: out of range");
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().middleRows(r0, n), rg,
                    !rg ? Graph::BackwardFn{} : [ia, r0, n](Graph& gr, int self) {
                        gr.grad(ia).middleRows(r0, n) += gr.grad(self);
                    });
    return Var{&g, out};
}

Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
    Graph& g = *a.g;
    if (c0 < 0 || n < 0 || c0 + n > a.cols()) throw InvalidArgument("slice_cols: out of range");
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(a.value().middleCols(c0, n), rg,
                    !rg ? Graph::BackwardFn{} : [ia, c0, n](Graph& gr, int self) {
                        gr.grad(ia).middleCols(c0, n) += gr.grad(self);
                    });
    return Var{&g, out};
}

Var hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidArgument("hcat: no operands");
    Graph& g = *parts.front().g;
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    bool rg = false;
    std::vector<int> ids;
    std::vector<Eigen::Index> widths;
    ids.reserve(parts.size());
    widths.reserve(parts.size());
    for (const Var& p : parts) {
        same_graph(parts.front(), p);
        if (p.rows() != rows) throw InvalidArgument("hcat: row counts differ");
        ids.push_back(p.id);
        widths.push_back(p.cols());
        cols += p.cols();
        rg = rg || p.requires_grad();
    }
    Mat y(rows, cols);
    Eigen::Index off = 0;
    for (const Var& p : parts) {
        y.middleCols(off, p.cols()) = p.value();
        off += p.cols();
    }
    Graph::BackwardFn bw;
    if (rg) {
        bw = [ids, widths](Graph& gr, int self) {
            const Mat& dy = gr.grad(self);
            Eigen::Index off = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (gr.requires_grad(ids[k]))
                    gr.accumulate(ids[k], dy.middleCols(off, widths[k]));
                off += widths[k];
            }
        };
    }
    int out = g.add(std::move(y), rg, std::move(bw));
    return Var{&g, out};
}

Var vcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw InvalidArgument("vcat: no operands");
    Graph& g = *parts.front().g;
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    bool rg = false;
    std::vector<int> ids;
    std::vector<Eigen::Index> heights;
    for (const Var& p : parts) {
        same_graph(parts.front(), p);
        if (p.cols() != cols) throw InvalidArgument("vcat: column counts differ");
        ids.push_back(p.id);
        heights.push_back(p.rows());
        rows += p.rows();
        rg = rg || p.requires_grad();
    }
    Mat y(rows, cols);
    Eigen::Index off = 0;
    for (const Var& p : parts) {
        y.middleRows(off, p.rows()) = p.value();
        off += p.rows();
    }
    Graph::BackwardFn bw;
    if (rg) {
        bw = [ids, heights](Graph& gr, int self) {
            const Mat& dy = gr.grad(self);
            Eigen::Index off = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (gr.requires_grad(ids[k]))
                    gr.accumulate(ids[k], dy.middleRows(off, heights[k]));
                off += heights[k];
            }
        };
    }
    int out = g.add(std::move(y), rg, std::move(bw));
    return Var{&g, out};
}

Var tile_cols(Var a, Eigen::Index k) {
    Graph& g = *a.g;
    if (k <= 0) throw InvalidArgument("tile_cols: k must be positive");
    const Eigen::Index c = a.cols();
    Mat y(a.rows(), c * k);
    for (Eigen::Index i = 0; i < k; ++i) y.middleCols(i * c, c) = a.value();
    const bool rg = a.requires_grad();
    const int ia = a.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [ia, k, c](Graph& gr, int self) {
        const Mat& dy = gr.grad(self);
        Mat acc = dy.middleCols(0, c);
        for (Eigen::Index i = 1; i < k; ++i) acc += dy.middleCols(i * c, c);
        gr.accumulate(ia, acc);
    });
    return Var{&g, out};
}

Var row_broadcast_mul(Var a, Var s) {
    Graph& g = same_graph(a, s);
    if (s.rows() != 1 || s.cols() != a.cols())
        throw InvalidArgument("row_broadcast_mul: scale must be [1 x cols(a)]");
    Mat y = a.value().array().rowwise() * s.value().array().row(0);
    const bool rg = a.requires_grad() || s.requires_grad();
    const int ia = a.id, is = s.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [ia, is](Graph& gr, int self) {
        const Mat& dy = gr.grad(self);
        if (gr.requires_grad(ia))
            gr.accumulate(ia, (dy.array().rowwise() * gr.value(is).array().row(0)).matrix());
        if (gr.requires_grad(is))
            gr.accumulate(is, dy.cwiseProduct(gr.value(ia)).colwise().sum());
    });
    return Var{&g, out};
}

Var pairwise_coupling(Var cflat, Var x) {
    Graph& g = same_graph(cflat, x);
    const Eigen::Index n = x.rows();
    const Eigen::Index m = x.cols();
    if (cflat.rows() != n * n || cflat.cols() != m)
        throw InvalidArgument("pairwise_coupling: C must be [N*N x M] for X [N x M]");
    Mat y(n, m);
    {
        const Mat& c = cflat.value();
        const Mat& xv = x.value();
        par::parallel_for(m, [&](std::int64_t col) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (i == j) continue;
                    acc += c(i * n + j, col) * (xv(i, col) - xv(j, col));
                }
                y(j, col) = acc;
            }
        });
    }
    const bool rg = cflat.requires_grad() || x.requires_grad();
    const int ic = cflat.id, ix = x.id;
    int out = g.add(std::move(y), rg, !rg ? Graph::BackwardFn{} : [ic, ix, n](Graph& gr,
                                                                              int self) {
        const Mat& dy = gr.grad(self);
        const Mat& c = gr.value(ic);
        const Mat& xv = gr.value(ix);
        const Eigen::Index m = dy.cols();
        const bool want_c = gr.requires_grad(ic);
        const bool want_x = gr.requires_grad(ix);
        Mat dc = want_c ? Mat::Zero(n * n, m) : Mat();
        Mat dx = want_x ? Mat::Zero(n, m) : Mat();
        par::parallel_for(m, [&](std::int64_t col) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double dj = dy(j, col);
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (i == j) continue;
                    const double cij = c(i * n + j, col);
                    if (want_c) dc(i * n + j, col) = dj * (xv(i, col) - xv(j, col));
                    if (want_x) {
                        dx(i, col) += cij * dj;
                        dx(j, col) -= cij * dj;
                    }
                }
            }
        });
        if (want_c) gr.accumulate(ic, dc);
        if (want_x) gr.accumulate(ix, dx);
    });
    return Var{&g, out};
}

}  // namespace goku::ad
