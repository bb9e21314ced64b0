#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "goku/core/errors.hpp"

namespace goku::ad {

using Mat = Eigen::MatrixXd;

// Reverse-mode tape over dense matrices. Nodes are appended in execution
// order (values are computed eagerly), so creation order is a topological
// order and the backward sweep is a single reverse pass. Gradient buffers
// are allocated lazily: a node whose gradient is never touched is skipped.
class Graph {
  public:
    // The backward callback receives the graph and the node's own id, so it
    // can read its output gradient without capturing it at build time.
    using BackwardFn = std::function<void(Graph&, int)>;

    int add(Mat value, bool requires_grad, BackwardFn backward = nullptr) {
        nodes_.push_back(Node{std::move(value), Mat(), std::move(backward), requires_grad});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Mat& value(int id) { return nodes_[static_cast<std::size_t>(id)].value; }

    bool requires_grad(int id) const {
        return nodes_[static_cast<std::size_t>(id)].requires_grad;
    }

    bool has_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() > 0; }

    // Gradient buffer, zero-initialized to the value's shape on first use.
    Mat& grad(int id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    template <typename Expr>
    void accumulate(int id, const Expr& e) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0)
            n.grad = e;
        else
            n.grad += e;
    }

    // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. `root` must
    // be a 1x1 scalar node.
    void backward(int root) {
        if (value(root).size() != 1)
            throw InvalidArgument("Graph::backward: root node is not a scalar");
        grad(root)(0, 0) = 1.0;
        for (int i = root; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backward && n.grad.size() > 0 && n.requires_grad) n.backward(*this, i);
        }
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    void reserve(std::size_t n) { nodes_.reserve(n); }

  private:
    struct Node {
        Mat value;
        Mat grad;
        BackwardFn backward;
        bool requires_grad;
    };
    std::vector<Node> nodes_;
};

// Lightweight handle; ops are free functions in ops.hpp.
struct Var {
    Graph* g = nullptr;
    int id = -1;

    bool valid() const { return g != nullptr && id >= 0; }
    const Mat& value() const { return g->value(id); }
    Mat& grad() const { return g->grad(id); }
    bool requires_grad() const { return g->requires_grad(id); }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

inline Var make_leaf(Graph& g, Mat v, bool requires_grad = true) {
    return Var{&g, g.add(std::move(v), requires_grad)};
}

inline Var make_constant(Graph& g, Mat v) { return make_leaf(g, std::move(v), false); }

}  // namespace goku::ad
