#include "csf/tape.hpp"

#include <cmath>
#include <string>

namespace csf {

namespace {

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

Var Tape::push(Matrix value, bool needs_grad, const char* op) {
    require_finite(value, op);
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad && grad_enabled_;
    n.op = op;
    if (n.needs_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, "const"); }

Var Tape::leaf(Matrix v, bool needs_grad) { return push(std::move(v), needs_grad, "leaf"); }

Var Tape::use(Param& p) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return Var{it->second};
    // Reference the param in place; the param must stay unmodified for the
    // tape's lifetime (optimizer steps happen after backward + flush).
    Node n;
    n.external = &p.value;
    n.needs_grad = p.trainable && grad_enabled_;
    n.op = "param";
    n.bound = &p;
    if (n.needs_grad) n.grad = Matrix(p.value.rows(), p.value.cols());
    nodes_.push_back(std::move(n));
    const Var v{static_cast<int>(nodes_.size()) - 1};
    bound_.emplace(&p, v.id);
    return v;
}

const Matrix& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.needs_grad) throw ShapeError("grad requested for non-differentiable node");
    return n.grad;
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& A = val(a.id);
    const Matrix& B = val(b.id);
    Var out = push(csf::matmul(A, B), needs(a) || needs(b), "matmul");
    if (node(out).needs_grad) {
        node(out).back = [a, b, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            if (t.needs(a)) matmul_nt_acc(G, t.val(b.id), t.g(a.id));
            if (t.needs(b)) matmul_tn_acc(t.val(a.id), G, t.g(b.id));
        };
    }
    return out;
}

Var Tape::add(Var a, Var b) {
    Var out = push(csf::add(val(a.id), val(b.id)), needs(a) || needs(b), "add");
    if (node(out).needs_grad) {
        node(out).back = [a, b, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            if (t.needs(a)) add_in_place(t.g(a.id), G);
            if (t.needs(b)) add_in_place(t.g(b.id), G);
        };
    }
    return out;
}

Var Tape::add_many(const std::vector<Var>& vs) {
    if (vs.empty()) throw ShapeError("add_many: empty list");
    if (vs.size() == 1) return vs[0];
    Matrix acc = val(vs[0].id);
    bool any = needs(vs[0]);
    for (size_t i = 1; i < vs.size(); ++i) {
        add_in_place(acc, val(vs[i].id));
        any = any || needs(vs[i]);
    }
    Var out = push(std::move(acc), any, "add_many");
    if (node(out).needs_grad) {
        node(out).back = [vs, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            for (const Var v : vs)
                if (t.needs(v)) add_in_place(t.g(v.id), G);
        };
    }
    return out;
}

Var Tape::sub(Var a, Var b) {
    Var out = push(csf::sub(val(a.id), val(b.id)), needs(a) || needs(b), "sub");
    if (node(out).needs_grad) {
        node(out).back = [a, b, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            if (t.needs(a)) add_in_place(t.g(a.id), G);
            if (t.needs(b)) {
                Matrix& gb = t.g(b.id);
                for (size_t i = 0; i < gb.size(); ++i) gb.vec()[i] -= G.vec()[i];
            }
        };
    }
    return out;
}

Var Tape::scale(Var a, double c) {
    Var out = push(csf::scale(val(a.id), c), needs(a), "scale");
    if (node(out).needs_grad) {
        node(out).back = [a, c, out](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& G = t.g(out.id);
            Matrix& ga = t.g(a.id);
            for (size_t i = 0; i < ga.size(); ++i) ga.vec()[i] += c * G.vec()[i];
        };
    }
    return out;
}

Var Tape::transpose(Var a) {
    Var out = push(csf::transpose(val(a.id)), needs(a), "transpose");
    if (node(out).needs_grad) {
        node(out).back = [a, out](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& G = t.g(out.id);
            Matrix& ga = t.g(a.id);
            for (int i = 0; i < G.rows(); ++i)
                for (int j = 0; j < G.cols(); ++j) ga(j, i) += G(i, j);
        };
    }
    return out;
}

Var Tape::add_col_broadcast(Var a, Var bias) {
    const Matrix& A = val(a.id);
    const Matrix& B = val(bias.id);
    if (B.cols() != 1 || B.rows() != A.rows()) throw ShapeError("add_col_broadcast: bias must be rows x 1");
    Matrix out_v = A;
    for (int i = 0; i < A.rows(); ++i) {
        double* row = out_v.row_ptr(i);
        const double bv = B(i, 0);
        for (int j = 0; j < A.cols(); ++j) row[j] += bv;
    }
    Var out = push(std::move(out_v), needs(a) || needs(bias), "add_col_broadcast");
    if (node(out).needs_grad) {
        node(out).back = [a, bias, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            if (t.needs(a)) add_in_place(t.g(a.id), G);
            if (t.needs(bias)) {
                Matrix& gb = t.g(bias.id);
                for (int i = 0; i < G.rows(); ++i) {
                    double s = 0.0;
                    const double* row = G.row_ptr(i);
                    for (int j = 0; j < G.cols(); ++j) s += row[j];
                    gb(i, 0) += s;
                }
            }
        };
    }
    return out;
}

Var Tape::softmax_columns(Var m, double temperature, const std::vector<uint8_t>* key_pad_mask) {
    if (temperature <= 0.0) throw NumericError("softmax_columns: temperature must be > 0");
    const Matrix& X = val(m.id);
    std::vector<uint8_t> mask;
    if (key_pad_mask) {
        if (static_cast<int>(key_pad_mask->size()) != X.rows())
            throw ShapeError("softmax_columns: mask length != row count");
        mask = *key_pad_mask;
    } else {
        mask.assign(X.rows(), 0);
    }
    Matrix Y(X.rows(), X.cols());
    for (int j = 0; j < X.cols(); ++j) {
        double mx = -1e308;
        bool any = false;
        for (int i = 0; i < X.rows(); ++i) {
            if (mask[i]) continue;
            any = true;
            mx = std::max(mx, temperature * X(i, j));
        }
        if (!any) throw ShapeError("softmax_columns: all keys masked");
        double sum = 0.0;
        for (int i = 0; i < X.rows(); ++i) {
            if (mask[i]) continue;
            const double e = std::exp(temperature * X(i, j) - mx);
            Y(i, j) = e;
            sum += e;
        }
        for (int i = 0; i < X.rows(); ++i)
            if (!mask[i]) Y(i, j) /= sum;
    }
    Var out = push(std::move(Y), needs(m), "softmax_columns");
    if (node(out).needs_grad) {
        node(out).back = [m, out, temperature](Tape& t) {
            if (!t.needs(m)) return;
            const Matrix& Yv = t.val(out.id);
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(m.id);
            for (int j = 0; j < Yv.cols(); ++j) {
                double dot = 0.0;
                for (int i = 0; i < Yv.rows(); ++i) dot += Yv(i, j) * G(i, j);
                for (int i = 0; i < Yv.rows(); ++i)
                    gx(i, j) += temperature * Yv(i, j) * (G(i, j) - dot);
            }
        };
    }
    return out;
}

Var Tape::layer_norm(Var m, Var gain, Var bias) {
    const Matrix& X = val(m.id);
    const Matrix& Gv = val(gain.id);
    const Matrix& Bv = val(bias.id);
    if (Gv.rows() != X.rows() || Gv.cols() != 1 || Bv.rows() != X.rows() || Bv.cols() != 1)
        throw ShapeError("layer_norm: gain/bias must be channels x 1");
    const int n = X.rows();
    Matrix xhat(n, X.cols());
    std::vector<double> inv(X.cols());
    Matrix Y(n, X.cols());
    for (int j = 0; j < X.cols(); ++j) {
        double mu = 0.0;
        for (int i = 0; i < n; ++i) mu += X(i, j);
        mu /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = X(i, j) - mu;
            var += d * d;
        }
        var /= n;
        const double iv = 1.0 / std::sqrt(var + kNormEps);
        inv[j] = iv;
        for (int i = 0; i < n; ++i) {
            const double xh = (X(i, j) - mu) * iv;
            xhat(i, j) = xh;
            Y(i, j) = Gv(i, 0) * xh + Bv(i, 0);
        }
    }
    Var out = push(std::move(Y), needs(m) || needs(gain) || needs(bias), "layer_norm");
    if (node(out).needs_grad) {
        node(out).back = [m, gain, bias, out, xhat = std::move(xhat), inv = std::move(inv)](Tape& t) {
            const Matrix& G = t.g(out.id);
            const Matrix& Gn = t.val(gain.id);
            const int n2 = G.rows();
            if (t.needs(gain)) {
                Matrix& gg = t.g(gain.id);
                for (int i = 0; i < n2; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < G.cols(); ++j) s += G(i, j) * xhat(i, j);
                    gg(i, 0) += s;
                }
            }
            if (t.needs(bias)) {
                Matrix& gb = t.g(bias.id);
                for (int i = 0; i < n2; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < G.cols(); ++j) s += G(i, j);
                    gb(i, 0) += s;
                }
            }
            if (t.needs(m)) {
                Matrix& gx = t.g(m.id);
                for (int j = 0; j < G.cols(); ++j) {
                    double sum1 = 0.0, sum2 = 0.0;
                    for (int i = 0; i < n2; ++i) {
                        const double dxh = G(i, j) * Gn(i, 0);
                        sum1 += dxh;
                        sum2 += dxh * xhat(i, j);
                    }
                    const double m1 = sum1 / n2, m2 = sum2 / n2;
                    for (int i = 0; i < n2; ++i) {
                        const double dxh = G(i, j) * Gn(i, 0);
                        gx(i, j) += inv[j] * (dxh - m1 - xhat(i, j) * m2);
                    }
                }
            }
        };
    }
    return out;
}

Var Tape::instance_norm(Var m) {
    const Matrix& X = val(m.id);
    if (X.cols() < 1) throw ShapeError("instance_norm: needs at least one patch");
    const int n = X.cols();
    Matrix xhat(X.rows(), n);
    std::vector<double> inv(X.rows());
    for (int i = 0; i < X.rows(); ++i) {
        const double* row = X.row_ptr(i);
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += row[j];
        mu /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = row[j] - mu;
            var += d * d;
        }
        var /= n;
        const double iv = 1.0 / std::sqrt(var + kNormEps);
        inv[i] = iv;
        for (int j = 0; j < n; ++j) xhat(i, j) = (row[j] - mu) * iv;
    }
    Var out = push(xhat, needs(m), "instance_norm");
    if (node(out).needs_grad) {
        node(out).back = [m, out, xhat = std::move(xhat), inv = std::move(inv)](Tape& t) {
            if (!t.needs(m)) return;
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(m.id);
            const int n2 = G.cols();
            for (int i = 0; i < G.rows(); ++i) {
                double sum1 = 0.0, sum2 = 0.0;
                for (int j = 0; j < n2; ++j) {
                    sum1 += G(i, j);
                    sum2 += G(i, j) * xhat(i, j);
                }
                const double m1 = sum1 / n2, m2 = sum2 / n2;
                for (int j = 0; j < n2; ++j)
                    gx(i, j) += inv[i] * (G(i, j) - m1 - xhat(i, j) * m2);
            }
        };
    }
    return out;
}

Var Tape::gelu(Var a) {
    const Matrix& X = val(a.id);
    Matrix Y(X.rows(), X.cols());
    for (size_t i = 0; i < X.size(); ++i) {
        const double x = X.vec()[i];
        Y.vec()[i] = x * norm_cdf(x);
    }
    Var out = push(std::move(Y), needs(a), "gelu");
    if (node(out).needs_grad) {
        node(out).back = [a, out](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& X2 = t.val(a.id);
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(a.id);
            for (size_t i = 0; i < X2.size(); ++i) {
                const double x = X2.vec()[i];
                gx.vec()[i] += G.vec()[i] * (norm_cdf(x) + x * norm_pdf(x));
            }
        };
    }
    return out;
}

Var Tape::repatch(Var a, int group_len) {
    if (group_len < 2) throw ShapeError("repatch: group length must be >= 2");
    const Matrix& X = val(a.id);
    if (X.cols() < 1) throw ShapeError("repatch: needs at least one patch");
    const int d = X.rows(), p_in = X.cols();
    const int p_out = (p_in + group_len - 1) / group_len;
    Matrix Y(d * group_len, p_out);
    for (int j = 0; j < p_out; ++j)
        for (int k = 0; k < group_len; ++k) {
            const int src = j * group_len + k;
            if (src >= p_in) break;  // zero padding
            for (int i = 0; i < d; ++i) Y(k * d + i, j) = X(i, src);
        }
    Var out = push(std::move(Y), needs(a), "repatch");
    if (node(out).needs_grad) {
        node(out).back = [a, out, d, p_in, group_len](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(a.id);
            for (int j = 0; j < G.cols(); ++j)
                for (int k = 0; k < group_len; ++k) {
                    const int src = j * group_len + k;
                    if (src >= p_in) break;
                    for (int i = 0; i < d; ++i) gx(i, src) += G(k * d + i, j);
                }
        };
    }
    return out;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
    const Matrix& X = val(a.id);
    if (r0 < 0 || r1 > X.rows() || r0 >= r1) throw ShapeError("slice_rows: bad range");
    Matrix Y(r1 - r0, X.cols());
    for (int i = r0; i < r1; ++i)
        for (int j = 0; j < X.cols(); ++j) Y(i - r0, j) = X(i, j);
    Var out = push(std::move(Y), needs(a), "slice_rows");
    if (node(out).needs_grad) {
        node(out).back = [a, out, r0](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(a.id);
            for (int i = 0; i < G.rows(); ++i)
                for (int j = 0; j < G.cols(); ++j) gx(i + r0, j) += G(i, j);
        };
    }
    return out;
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Matrix& X = val(a.id);
    if (c0 < 0 || c1 > X.cols() || c0 >= c1) throw ShapeError("slice_cols: bad range");
    Matrix Y(X.rows(), c1 - c0);
    for (int i = 0; i < X.rows(); ++i)
        for (int j = c0; j < c1; ++j) Y(i, j - c0) = X(i, j);
    Var out = push(std::move(Y), needs(a), "slice_cols");
    if (node(out).needs_grad) {
        node(out).back = [a, out, c0](Tape& t) {
            if (!t.needs(a)) return;
            const Matrix& G = t.g(out.id);
            Matrix& gx = t.g(a.id);
            for (int i = 0; i < G.rows(); ++i)
                for (int j = 0; j < G.cols(); ++j) gx(i, j + c0) += G(i, j);
        };
    }
    return out;
}

Var Tape::concat_rows(const std::vector<Var>& vs) {
    if (vs.empty()) throw ShapeError("concat_rows: empty list");
    int total = 0;
    const int cols = val(vs[0].id).cols();
    bool any = false;
    for (const Var v : vs) {
        if (val(v.id).cols() != cols) throw ShapeError("concat_rows: column mismatch");
        total += val(v.id).rows();
        any = any || needs(v);
    }
    Matrix Y(total, cols);
    int off = 0;
    for (const Var v : vs) {
        const Matrix& X = val(v.id);
        for (int i = 0; i < X.rows(); ++i)
            for (int j = 0; j < cols; ++j) Y(off + i, j) = X(i, j);
        off += X.rows();
    }
    Var out = push(std::move(Y), any, "concat_rows");
    if (node(out).needs_grad) {
        node(out).back = [vs, out](Tape& t) {
            const Matrix& G = t.g(out.id);
            int off2 = 0;
            for (const Var v : vs) {
                const int r = t.val(v.id).rows();
                if (t.needs(v)) {
                    Matrix& gx = t.g(v.id);
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < G.cols(); ++j) gx(i, j) += G(off2 + i, j);
                }
                off2 += r;
            }
        };
    }
    return out;
}

Var Tape::sum_squares(Var a) {
    const Matrix& X = val(a.id);
    Matrix s(1, 1);
    s(0, 0) = frobenius_sq(X);
    Var out = push(std::move(s), needs(a), "sum_squares");
    if (node(out).needs_grad) {
        node(out).back = [a, out](Tape& t) {
            if (!t.needs(a)) return;
            const double gs = t.g(out.id)(0, 0);
            const Matrix& X2 = t.val(a.id);
            Matrix& gx = t.g(a.id);
            for (size_t i = 0; i < X2.size(); ++i) gx.vec()[i] += 2.0 * gs * X2.vec()[i];
        };
    }
    return out;
}

Var Tape::sq_error_columns(Var pred, const Matrix& target, const std::vector<int>& valid_rows) {
    const Matrix& P = val(pred.id);
    if (!P.same_shape(target)) throw ShapeError("sq_error_columns: shape mismatch");
    if (static_cast<int>(valid_rows.size()) != P.cols())
        throw ShapeError("sq_error_columns: valid_rows length != columns");
    double s = 0.0;
    for (int j = 0; j < P.cols(); ++j) {
        const int v = valid_rows[j];
        if (v < 0 || v > P.rows()) throw ShapeError("sq_error_columns: valid count out of range");
        for (int i = 0; i < v; ++i) {
            const double d = P(i, j) - target(i, j);
            s += d * d;
        }
    }
    Matrix sv(1, 1);
    sv(0, 0) = s;
    Var out = push(std::move(sv), needs(pred), "sq_error_columns");
    if (node(out).needs_grad) {
        node(out).back = [pred, out, target, valid_rows](Tape& t) {
            if (!t.needs(pred)) return;
            const double gs = t.g(out.id)(0, 0);
            const Matrix& P2 = t.val(pred.id);
            Matrix& gp = t.g(pred.id);
            for (int j = 0; j < P2.cols(); ++j)
                for (int i = 0; i < valid_rows[j]; ++i)
                    gp(i, j) += 2.0 * gs * (P2(i, j) - target(i, j));
        };
    }
    return out;
}

Var Tape::l1_mean(Var pred, const Matrix& target) {
    const Matrix& P = val(pred.id);
    if (!P.same_shape(target)) throw ShapeError("l1_mean: shape mismatch");
    const double n = static_cast<double>(P.size());
    double s = 0.0;
    for (size_t i = 0; i < P.size(); ++i) s += std::abs(P.vec()[i] - target.vec()[i]);
    Matrix sv(1, 1);
    sv(0, 0) = s / n;
    Var out = push(std::move(sv), needs(pred), "l1_mean");
    if (node(out).needs_grad) {
        node(out).back = [pred, out, target, n](Tape& t) {
            if (!t.needs(pred)) return;
            const double gs = t.g(out.id)(0, 0);
            const Matrix& P2 = t.val(pred.id);
            Matrix& gp = t.g(pred.id);
            for (size_t i = 0; i < P2.size(); ++i) {
                const double d = P2.vec()[i] - target.vec()[i];
                const double sg = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                gp.vec()[i] += gs * sg / n;
            }
        };
    }
    return out;
}

Var Tape::cross_entropy_logits(Var logits, int label) {
    const Matrix& Z = val(logits.id);
    if (Z.cols() != 1) throw ShapeError("cross_entropy_logits: logits must be C x 1");
    if (label < 0 || label >= Z.rows()) throw IndexError("cross_entropy_logits: label out of range");
    double mx = Z(0, 0);
    for (int i = 1; i < Z.rows(); ++i) mx = std::max(mx, Z(i, 0));
    double sum = 0.0;
    for (int i = 0; i < Z.rows(); ++i) sum += std::exp(Z(i, 0) - mx);
    Matrix sv(1, 1);
    sv(0, 0) = mx + std::log(sum) - Z(label, 0);
    Var out = push(std::move(sv), needs(logits), "cross_entropy_logits");
    if (node(out).needs_grad) {
        node(out).back = [logits, out, label, mx, sum](Tape& t) {
            if (!t.needs(logits)) return;
            const double gs = t.g(out.id)(0, 0);
            const Matrix& Z2 = t.val(logits.id);
            Matrix& gz = t.g(logits.id);
            for (int i = 0; i < Z2.rows(); ++i) {
                const double p = std::exp(Z2(i, 0) - mx) / sum;
                gz(i, 0) += gs * (p - (i == label ? 1.0 : 0.0));
            }
        };
    }
    return out;
}

void Tape::backward(Var root) {
    if (backward_done_) throw NumericError("Tape::backward called twice");
    if (!grad_enabled_) throw NumericError("Tape::backward on grad-disabled tape");
    Node& r = nodes_[root.id];
    if (val(root.id).rows() != 1 || val(root.id).cols() != 1)
        throw ShapeError("backward: root must be 1x1");
    if (!r.needs_grad) throw ShapeError("backward: root does not require gradients");
    backward_done_ = true;
    r.grad(0, 0) = 1.0;
    for (int id = root.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.needs_grad && n.back) n.back(*this);
    }
}

void Tape::flush_param_grads() {
    for (Node& n : nodes_) {
        if (n.bound && n.needs_grad) add_in_place(n.bound->grad, n.grad);
    }
}

}  // namespace csf
