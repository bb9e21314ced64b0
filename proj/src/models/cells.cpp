#include "goku/models/cells.hpp"

#include "goku/core/errors.hpp"

namespace goku::models {

using ad::Var;

Var rnn_relu_step(Var Wx, Var Wh, Var b, Var x, Var h) {
    return ad::relu(ad::add(ad::affine(Wx, x, b), ad::matmul(Wh, h)));
}

LstmVars lstm_step(Var Wx, Var Wh, Var b, Var x, LstmVars s) {
    if (Wx.rows() % 4 != 0)
        throw InvalidArgument("lstm_step: packed gate matrix rows must be a multiple of 4");
    const Eigen::Index H = Wx.rows() / 4;
    Var pre = ad::add(ad::affine(Wx, x, b), ad::matmul(Wh, s.h));
    Var i = ad::sigmoid(ad::slice_rows(pre, 0, H));
    Var f = ad::sigmoid(ad::slice_rows(pre, H, H));
    Var g = ad::tanh_op(ad::slice_rows(pre, 2 * H, H));
    Var o = ad::sigmoid(ad::slice_rows(pre, 3 * H, H));
    Var c = ad::add(ad::hadamard(f, s.c), ad::hadamard(i, g));
    Var h = ad::hadamard(o, ad::tanh_op(c));
    return LstmVars{h, c};
}

}  // namespace goku::models
