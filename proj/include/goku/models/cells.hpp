#pragma once

#include "goku/ad/ops.hpp"

namespace goku::models {

// Recurrent cell steps on the tape. States are [H x B] with one column per
// batch slot; inputs are [in x B].

// h' = relu(Wx x + Wh h + b). Wx is [H x in], Wh [H x H], b [H x 1].
ad::Var rnn_relu_step(ad::Var Wx, ad::Var Wh, ad::Var b, ad::Var x, ad::Var h);

struct LstmVars {
    ad::Var h;
    ad::Var c;
};

// Standard LSTM cell. The packed matrices stack the gate rows in the order
// input, forget, cell candidate, output (H rows each): Wx [4H x in],
// Wh [4H x H], b [4H x 1].
//   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
//   c' = f.c + i.g, h' = o.tanh(c')
LstmVars lstm_step(ad::Var Wx, ad::Var Wh, ad::Var b, ad::Var x, LstmVars s);

}  // namespace goku::models
