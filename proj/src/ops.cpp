#include "voe/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace voe::num {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EVec = Eigen::Matrix<double, Eigen::Dynamic, 1>;
using MapM = Eigen::Map<EMat>;
using MapCM = Eigen::Map<const EMat>;
using MapV = Eigen::Map<EVec>;
using MapCV = Eigen::Map<const EVec>;

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void check_same_shape(const Tape& t, Var a, Var b, const char* op) {
    if (t.shape(a) != t.shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             t.shape(a).str() + " vs " + t.shape(b).str());
}

double act_apply(Act a, double x) {
    switch (a) {
        case Act::none: return x;
        case Act::relu: return x > 0.0 ? x : 0.0;
        case Act::tanh: return std::tanh(x);
        case Act::sigmoid: return stable_sigmoid(x);
    }
    return x;
}

// Derivative expressed through the activation output.
double act_grad_from_out(Act a, double y) {
    switch (a) {
        case Act::none: return 1.0;
        case Act::relu: return y > 0.0 ? 1.0 : 0.0;
        case Act::tanh: return 1.0 - y * y;
        case Act::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace

// ---------------------------------------------------------------- conv2d

Var conv2d(Tape& t, Var input, Var kernels, Var bias, int stride_y, int stride_x) {
    const Shape& is = t.shape(input);
    const Shape& ks = t.shape(kernels);
    if (is.rank() != 3)
        throw DimensionError("conv2d: input must be HxWxC, got " + is.str());
    if (ks.rank() != 4)
        throw DimensionError("conv2d: kernels must be khxkwxCxK, got " + ks.str());
    if (stride_y < 1 || stride_x < 1)
        throw ParameterError("conv2d: stride components must be >= 1");
    const int H = is[0], W = is[1], C = is[2];
    const int kh = ks[0], kw = ks[1], K = ks[3];
    if (ks[2] != C)
        throw DimensionError("conv2d: channel axis mismatch: input C=" +
                             std::to_string(C) + ", kernel C=" + std::to_string(ks[2]));
    if (bias.valid() && static_cast<int>(t.shape(bias).numel()) != K)
        throw DimensionError("conv2d: bias length does not match output channels");

    const int OH = (H + stride_y - 1) / stride_y;
    const int OW = (W + stride_x - 1) / stride_x;
    const int pad_h = std::max((OH - 1) * stride_y + kh - H, 0);
    const int pad_w = std::max((OW - 1) * stride_x + kw - W, 0);
    const int pad_top = pad_h / 2;
    const int pad_left = pad_w / 2;

    const int rows = OH * OW;
    const int cols = kh * kw * C;

    // A unit kernel at unit stride reads the input matrix directly; no
    // patch matrix needs to be materialised.
    const bool direct = (kh == 1 && kw == 1 && stride_y == 1 && stride_x == 1);

    std::shared_ptr<std::vector<double>> patches;
    if (!direct) {
        patches = std::make_shared<std::vector<double>>(
            static_cast<std::size_t>(rows) * cols, 0.0);
        const auto& in = t.val(input);
        double* p = patches->data();
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                double* row = p + (static_cast<std::size_t>(oy) * OW + ox) * cols;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride_y - pad_top + ky;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * stride_x - pad_left + kx;
                        if (ix < 0 || ix >= W) continue;
                        const double* src = &in[(static_cast<std::size_t>(iy) * W + ix) * C];
                        double* dst = row + (ky * kw + kx) * C;
                        for (int c = 0; c < C; ++c) dst[c] = src[c];
                    }
                }
            }
        }
    }

    Tape::Node& out = t.make(Shape{OH, OW, K});
    {
        MapCM pm(direct ? t.val(input).data() : patches->data(), rows, cols);
        MapCM km(t.val(kernels).data(), cols, K);
        MapM om(out.val.data(), rows, K);
        om.noalias() = pm * km;
        if (bias.valid()) {
            MapCV bv(t.val(bias).data(), K);
            om.rowwise() += bv.transpose();
        }
    }

    const int in_id = input.id, k_id = kernels.id, b_id = bias.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        MapCM gy(n.grad.data(), rows, K);
        if (b_id >= 0) {
            // Fixed-order scalar accumulation; Eigen's column reduction
            // peels by pointer alignment, which breaks bitwise reruns.
            auto& gb = tp.node(b_id).grad;
            for (int r = 0; r < rows; ++r) {
                const double* g = n.grad.data() + static_cast<std::size_t>(r) * K;
                for (int k = 0; k < K; ++k) gb[static_cast<std::size_t>(k)] += g[k];
            }
        }
        // Kernel gradient: P^T * dY.
        {
            MapCM pm(direct ? tp.val(Var{in_id}).data() : patches->data(), rows,
                     cols);
            MapM gk(tp.node(k_id).grad.data(), cols, K);
            gk.noalias() += pm.transpose() * gy;
        }
        // Input gradient: col2im(dY * K^T).
        {
            MapCM km(tp.val(Var{k_id}).data(), cols, K);
            auto& gin = tp.node(in_id).grad;
            if (direct) {
                MapM gm(gin.data(), rows, cols);
                gm.noalias() += gy * km.transpose();
                return;
            }
            EMat gp(rows, cols);
            gp.noalias() = gy * km.transpose();
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    const double* row = gp.data() + (static_cast<std::size_t>(oy) * OW + ox) * cols;
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride_y - pad_top + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride_x - pad_left + kx;
                            if (ix < 0 || ix >= W) continue;
                            double* dst = &gin[(static_cast<std::size_t>(iy) * W + ix) * C];
                            const double* src = row + (ky * kw + kx) * C;
                            for (int c = 0; c < C; ++c) dst[c] += src[c];
                        }
                    }
                }
            }
        }
    };
    return Var{t.last_id()};
}

Var conv2d(Tape& t, Var input, Var kernels, int stride_y, int stride_x) {
    return conv2d(t, input, kernels, Var{}, stride_y, stride_x);
}

// ------------------------------------------------------------ upsample2x

Var upsample2x(Tape& t, Var input) {
    const Shape& is = t.shape(input);
    if (is.rank() != 3)
        throw DimensionError("upsample2x: input must be HxWxC, got " + is.str());
    const int H = is[0], W = is[1], C = is[2];
    Tape::Node& out = t.make(Shape{2 * H, 2 * W, C});
    {
        const auto& in = t.val(input);
        for (int y = 0; y < 2 * H; ++y) {
            for (int x = 0; x < 2 * W; ++x) {
                const double* src = &in[(static_cast<std::size_t>(y / 2) * W + x / 2) * C];
                double* dst = &out.val[(static_cast<std::size_t>(y) * 2 * W + x) * C];
                for (int c = 0; c < C; ++c) dst[c] = src[c];
            }
        }
    }
    const int in_id = input.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& gin = tp.node(in_id).grad;
        for (int y = 0; y < 2 * H; ++y) {
            for (int x = 0; x < 2 * W; ++x) {
                const double* src = &n.grad[(static_cast<std::size_t>(y) * 2 * W + x) * C];
                double* dst = &gin[(static_cast<std::size_t>(y / 2) * W + x / 2) * C];
                for (int c = 0; c < C; ++c) dst[c] += src[c];
            }
        }
    };
    return Var{t.last_id()};
}

// ----------------------------------------------------------------- dense

Var dense(Tape& t, Var x, Var w, Var b, Act act) {
    const Shape& xs = t.shape(x);
    const Shape& ws = t.shape(w);
    const Shape& bs = t.shape(b);
    if (ws.rank() != 2)
        throw DimensionError("dense: weights must be rows x cols, got " + ws.str());
    const int rows = ws[0], cols = ws[1];
    if (static_cast<int>(xs.numel()) != cols)
        throw DimensionError("dense: weight column count " + std::to_string(cols) +
                             " does not match input length " + std::to_string(xs.numel()));
    if (static_cast<int>(bs.numel()) != rows)
        throw DimensionError("dense: bias length " + std::to_string(bs.numel()) +
                             " does not match weight row count " + std::to_string(rows));

    Tape::Node& out = t.make(Shape{rows});
    {
        MapCM wm(t.val(w).data(), rows, cols);
        MapCV xv(t.val(x).data(), cols);
        MapCV bv(t.val(b).data(), rows);
        MapV ov(out.val.data(), rows);
        ov.noalias() = wm * xv + bv;
        for (int i = 0; i < rows; ++i) out.val[static_cast<std::size_t>(i)] =
            act_apply(act, out.val[static_cast<std::size_t>(i)]);
    }
    const int x_id = x.id, w_id = w.id, b_id = b.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        EVec dpre(rows);
        for (int i = 0; i < rows; ++i)
            dpre[i] = n.grad[static_cast<std::size_t>(i)] *
                      act_grad_from_out(act, n.val[static_cast<std::size_t>(i)]);
        MapCV xv(tp.val(Var{x_id}).data(), cols);
        {
            MapM gw(tp.node(w_id).grad.data(), rows, cols);
            gw.noalias() += dpre * xv.transpose();
        }
        {
            MapV gb(tp.node(b_id).grad.data(), rows);
            gb.noalias() += dpre;
        }
        {
            MapCM wm(tp.val(Var{w_id}).data(), rows, cols);
            MapV gx(tp.node(x_id).grad.data(), cols);
            gx.noalias() += wm.transpose() * dpre;
        }
    };
    return Var{t.last_id()};
}

// ---------------------------------------------------------- matrix * vec

Var matvec(Tape& t, Var m, Var v) {
    const Shape& ms = t.shape(m);
    if (ms.rank() != 2) throw DimensionError("matvec: matrix must be rank 2");
    const int R = ms[0], C = ms[1];
    if (static_cast<int>(t.shape(v).numel()) != C)
        throw DimensionError("matvec: vector length mismatch on column axis");
    Tape::Node& out = t.make(Shape{R});
    {
        MapCM mm(t.val(m).data(), R, C);
        MapCV vv(t.val(v).data(), C);
        MapV ov(out.val.data(), R);
        ov.noalias() = mm * vv;
    }
    const int m_id = m.id, v_id = v.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        MapCV g(n.grad.data(), R);
        MapCV vv(tp.val(Var{v_id}).data(), C);
        MapM gm(tp.node(m_id).grad.data(), R, C);
        gm.noalias() += g * vv.transpose();
        MapCM mm(tp.val(Var{m_id}).data(), R, C);
        MapV gv(tp.node(v_id).grad.data(), C);
        gv.noalias() += mm.transpose() * g;
    };
    return Var{t.last_id()};
}

Var matvec_t(Tape& t, Var m, Var v) {
    const Shape& ms = t.shape(m);
    if (ms.rank() != 2) throw DimensionError("matvec_t: matrix must be rank 2");
    const int R = ms[0], C = ms[1];
    if (static_cast<int>(t.shape(v).numel()) != R)
        throw DimensionError("matvec_t: vector length mismatch on row axis");
    Tape::Node& out = t.make(Shape{C});
    {
        MapCM mm(t.val(m).data(), R, C);
        MapCV vv(t.val(v).data(), R);
        MapV ov(out.val.data(), C);
        ov.noalias() = mm.transpose() * vv;
    }
    const int m_id = m.id, v_id = v.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        MapCV g(n.grad.data(), C);
        MapCV vv(tp.val(Var{v_id}).data(), R);
        MapM gm(tp.node(m_id).grad.data(), R, C);
        gm.noalias() += vv * g.transpose();
        MapCM mm(tp.val(Var{m_id}).data(), R, C);
        MapV gv(tp.node(v_id).grad.data(), R);
        gv.noalias() += mm * g;
    };
    return Var{t.last_id()};
}

// --------------------------------------------------- cosine similarities

Var cosine_similarity_rows(Tape& t, Var m, Var key, double eps) {
    const Shape& ms = t.shape(m);
    if (ms.rank() != 2) throw DimensionError("cosine_similarity_rows: matrix must be rank 2");
    const int R = ms[0], C = ms[1];
    if (static_cast<int>(t.shape(key).numel()) != C)
        throw DimensionError("cosine_similarity_rows: key length mismatch");

    auto row_norm = std::make_shared<std::vector<double>>(static_cast<std::size_t>(R));
    Tape::Node& out = t.make(Shape{R});
    double key_norm = 0.0;
    {
        const auto& mv = t.val(m);
        const auto& kv = t.val(key);
        for (int c = 0; c < C; ++c) key_norm += kv[static_cast<std::size_t>(c)] * kv[static_cast<std::size_t>(c)];
        key_norm = std::sqrt(key_norm);
        for (int r = 0; r < R; ++r) {
            double u = 0.0, a2 = 0.0;
            const double* row = &mv[static_cast<std::size_t>(r) * C];
            for (int c = 0; c < C; ++c) {
                u += row[c] * kv[static_cast<std::size_t>(c)];
                a2 += row[c] * row[c];
            }
            const double a = std::sqrt(a2);
            (*row_norm)[static_cast<std::size_t>(r)] = a;
            out.val[static_cast<std::size_t>(r)] = u / ((a + eps) * (key_norm + eps));
        }
    }
    const int m_id = m.id, k_id = key.id;
    const double bnorm = key_norm;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        const auto& mv = tp.val(Var{m_id});
        const auto& kv = tp.val(Var{k_id});
        auto& gm = tp.node(m_id).grad;
        auto& gk = tp.node(k_id).grad;
        const double B = bnorm + eps;
        for (int r = 0; r < R; ++r) {
            const double g = n.grad[static_cast<std::size_t>(r)];
            if (g == 0.0) continue;
            const double a = (*row_norm)[static_cast<std::size_t>(r)];
            const double A = a + eps;
            const double c = n.val[static_cast<std::size_t>(r)];
            const double* row = &mv[static_cast<std::size_t>(r) * C];
            double* grow = &gm[static_cast<std::size_t>(r) * C];
            const double inv_a = a > 0.0 ? 1.0 / a : 0.0;
            const double inv_b = bnorm > 0.0 ? 1.0 / bnorm : 0.0;
            for (int cc = 0; cc < C; ++cc) {
                const double kc = kv[static_cast<std::size_t>(cc)];
                grow[cc] += g * (kc / (A * B) - (c / A) * row[cc] * inv_a);
                gk[static_cast<std::size_t>(cc)] +=
                    g * (row[cc] / (A * B) - (c / B) * kc * inv_b);
            }
        }
    };
    return Var{t.last_id()};
}

// ------------------------------------------------------------ slot_write

Var slot_write(Tape& t, Var m, int row, Var v) {
    const Shape& ms = t.shape(m);
    if (ms.rank() != 2) throw DimensionError("slot_write: matrix must be rank 2");
    const int R = ms[0], C = ms[1];
    if (row < 0 || row >= R) throw ParameterError("slot_write: row out of range");
    if (static_cast<int>(t.shape(v).numel()) != C)
        throw DimensionError("slot_write: vector length mismatch");
    Tape::Node& out = t.make(ms);
    out.val = t.val(m);
    {
        const auto& vv = t.val(v);
        std::copy(vv.begin(), vv.end(), out.val.begin() + static_cast<std::size_t>(row) * C);
    }
    const int m_id = m.id, v_id = v.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& gm = tp.node(m_id).grad;
        auto& gv = tp.node(v_id).grad;
        for (int r = 0; r < R; ++r) {
            const double* src = &n.grad[static_cast<std::size_t>(r) * C];
            if (r == row) {
                for (int c = 0; c < C; ++c) gv[static_cast<std::size_t>(c)] += src[c];
            } else {
                double* dst = &gm[static_cast<std::size_t>(r) * C];
                for (int c = 0; c < C; ++c) dst[c] += src[c];
            }
        }
    };
    return Var{t.last_id()};
}

// ----------------------------------------------------------- elementwise

namespace {

template <typename Fwd, typename Bwd>
Var unary_elementwise(Tape& t, Var a, Fwd fwd, Bwd bwd_factor) {
    Tape::Node& out = t.make(t.shape(a));
    const auto& av = t.val(a);
    for (std::size_t i = 0; i < av.size(); ++i) out.val[i] = fwd(av[i]);
    const int a_id = a.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        const auto& av2 = tp.val(Var{a_id});
        auto& ga = tp.node(a_id).grad;
        for (std::size_t i = 0; i < av2.size(); ++i)
            ga[i] += n.grad[i] * bwd_factor(av2[i], n.val[i]);
    };
    return Var{t.last_id()};
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
    check_same_shape(t, a, b, "add");
    Tape::Node& out = t.make(t.shape(a));
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    for (std::size_t i = 0; i < av.size(); ++i) out.val[i] = av[i] + bv[i];
    const int a_id = a.id, b_id = b.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& ga = tp.node(a_id).grad;
        auto& gb = tp.node(b_id).grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            ga[i] += n.grad[i];
            gb[i] += n.grad[i];
        }
    };
    return Var{t.last_id()};
}

Var sub(Tape& t, Var a, Var b) {
    check_same_shape(t, a, b, "sub");
    Tape::Node& out = t.make(t.shape(a));
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    for (std::size_t i = 0; i < av.size(); ++i) out.val[i] = av[i] - bv[i];
    const int a_id = a.id, b_id = b.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& ga = tp.node(a_id).grad;
        auto& gb = tp.node(b_id).grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            ga[i] += n.grad[i];
            gb[i] -= n.grad[i];
        }
    };
    return Var{t.last_id()};
}

Var mul(Tape& t, Var a, Var b) {
    check_same_shape(t, a, b, "mul");
    Tape::Node& out = t.make(t.shape(a));
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    for (std::size_t i = 0; i < av.size(); ++i) out.val[i] = av[i] * bv[i];
    const int a_id = a.id, b_id = b.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        const auto& av2 = tp.val(Var{a_id});
        const auto& bv2 = tp.val(Var{b_id});
        auto& ga = tp.node(a_id).grad;
        auto& gb = tp.node(b_id).grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            ga[i] += n.grad[i] * bv2[i];
            gb[i] += n.grad[i] * av2[i];
        }
    };
    return Var{t.last_id()};
}

Var scale(Tape& t, Var a, double k) { return affine(t, a, k, 0.0); }

Var affine(Tape& t, Var a, double k, double c) {
    return unary_elementwise(
        t, a, [k, c](double x) { return k * x + c; },
        [k](double, double) { return k; });
}

Var relu(Tape& t, Var a) {
    return unary_elementwise(
        t, a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double, double y) { return y > 0.0 ? 1.0 : 0.0; });
}

Var tanh_op(Tape& t, Var a) {
    return unary_elementwise(
        t, a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Tape& t, Var a) {
    return unary_elementwise(
        t, a, [](double x) { return stable_sigmoid(x); },
        [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Tape& t, Var a) {
    return unary_elementwise(
        t, a, [](double x) { return stable_softplus(x); },
        [](double x, double) { return stable_sigmoid(x); });
}

Var clip(Tape& t, Var a, double lo, double hi) {
    if (!(lo < hi)) throw ParameterError("clip: lo must be < hi");
    return unary_elementwise(
        t, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// -------------------------------------------------------- shape plumbing

Var tile_channels(Tape& t, Var channels, int h, int w) {
    const int c = static_cast<int>(t.shape(channels).numel());
    if (h < 1 || w < 1) throw ParameterError("tile_channels: bad grid");
    Tape::Node& out = t.make(Shape{h, w, c});
    const auto& cv = t.val(channels);
    for (int i = 0; i < h * w; ++i)
        std::copy(cv.begin(), cv.end(),
                  out.val.begin() + static_cast<std::ptrdiff_t>(i) * c);
    const int c_id = channels.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& g = tp.node(c_id).grad;
        for (int i = 0; i < h * w; ++i)
            for (int j = 0; j < c; ++j)
                g[static_cast<std::size_t>(j)] +=
                    n.grad[static_cast<std::size_t>(i) * c + j];
    };
    return Var{t.last_id()};
}

Var concat(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw ParameterError("concat: no parts");
    std::size_t total = 0;
    for (Var p : parts) total += t.shape(p).numel();
    Tape::Node& out = t.make(Shape{static_cast<int>(total)});
    std::size_t off = 0;
    for (Var p : parts) {
        const auto& pv = t.val(p);
        std::copy(pv.begin(), pv.end(), out.val.begin() + static_cast<std::ptrdiff_t>(off));
        off += pv.size();
    }
    std::vector<int> ids(parts.size());
    std::vector<std::size_t> sizes(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        ids[i] = parts[i].id;
        sizes[i] = t.shape(parts[i]).numel();
    }
    out.back = [ids, sizes](Tape& tp, const Tape::Node& n) {
        std::size_t off2 = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto& g = tp.node(ids[i]).grad;
            for (std::size_t j = 0; j < sizes[i]; ++j) g[j] += n.grad[off2 + j];
            off2 += sizes[i];
        }
    };
    return Var{t.last_id()};
}

Var concat(Tape& t, Var a, Var b) {
    const Var parts[] = {a, b};
    return concat(t, std::span<const Var>(parts, 2));
}

Var concat(Tape& t, Var a, Var b, Var c) {
    const Var parts[] = {a, b, c};
    return concat(t, std::span<const Var>(parts, 3));
}

Var slice(Tape& t, Var a, int offset, int len) {
    const std::size_t n = t.shape(a).numel();
    if (offset < 0 || len < 0 || static_cast<std::size_t>(offset + len) > n)
        throw ParameterError("slice: range out of bounds");
    Tape::Node& out = t.make(Shape{len});
    const auto& av = t.val(a);
    std::copy(av.begin() + offset, av.begin() + offset + len, out.val.begin());
    const int a_id = a.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& ga = tp.node(a_id).grad;
        for (int i = 0; i < len; ++i) ga[static_cast<std::size_t>(offset + i)] += n.grad[static_cast<std::size_t>(i)];
    };
    return Var{t.last_id()};
}

Var reshape(Tape& t, Var a, Shape s) {
    if (s.numel() != t.shape(a).numel())
        throw DimensionError("reshape: element count mismatch " + t.shape(a).str() +
                             " -> " + s.str());
    Tape::Node& out = t.make(s);
    out.val = t.val(a);
    const int a_id = a.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& ga = tp.node(a_id).grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
    };
    return Var{t.last_id()};
}

// ------------------------------------------------------------ reductions

Var sum(Tape& t, Var a) {
    Tape::Node& out = t.make(Shape{1});
    double s = 0.0;
    for (double v : t.val(a)) s += v;
    out.val[0] = s;
    const int a_id = a.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        auto& ga = tp.node(a_id).grad;
        for (double& g : ga) g += n.grad[0];
    };
    return Var{t.last_id()};
}

Var softmax(Tape& t, Var a) {
    Tape::Node& out = t.make(t.shape(a));
    const auto& av = t.val(a);
    double mx = av[0];
    for (double v : av) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        out.val[i] = std::exp(av[i] - mx);
        z += out.val[i];
    }
    for (double& v : out.val) v /= z;
    const int a_id = a.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        double dot_gy = 0.0;
        for (std::size_t i = 0; i < n.val.size(); ++i) dot_gy += n.grad[i] * n.val[i];
        auto& ga = tp.node(a_id).grad;
        for (std::size_t i = 0; i < n.val.size(); ++i)
            ga[i] += n.val[i] * (n.grad[i] - dot_gy);
    };
    return Var{t.last_id()};
}

Var dot(Tape& t, Var a, Var b) {
    check_same_shape(t, a, b, "dot");
    Tape::Node& out = t.make(Shape{1});
    const auto& av = t.val(a);
    const auto& bv = t.val(b);
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    out.val[0] = s;
    const int a_id = a.id, b_id = b.id;
    out.back = [=](Tape& tp, const Tape::Node& n) {
        const auto& av2 = tp.val(Var{a_id});
        const auto& bv2 = tp.val(Var{b_id});
        auto& ga = tp.node(a_id).grad;
        auto& gb = tp.node(b_id).grad;
        for (std::size_t i = 0; i < av2.size(); ++i) {
            ga[i] += n.grad[0] * bv2[i];
            gb[i] += n.grad[0] * av2[i];
        }
    };
    return Var{t.last_id()};
}

// ---------------------------------------------------------- distributions

Var gaussian_kl_op(Tape& t, Var mean_p, Var std_p, Var mean_q, Var std_q) {
    const std::size_t n = t.shape(mean_p).numel();
    if (t.shape(std_p).numel() != n || t.shape(mean_q).numel() != n ||
        t.shape(std_q).numel() != n)
        throw DimensionError("gaussian_kl: dimension mismatch between p and q");
    for (std::size_t i = 0; i < n; ++i)
        if (!(t.val(std_p)[i] > 0.0) || !(t.val(std_q)[i] > 0.0))
            throw ContractError("gaussian_kl: std components must be positive");

    // References into the tape are taken after make(): growing the node
    // vector invalidates earlier ones.
    Tape::Node& out = t.make(Shape{1});
    const auto& mp = t.val(mean_p);
    const auto& sp = t.val(std_p);
    const auto& mq = t.val(mean_q);
    const auto& sq = t.val(std_q);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = mp[i] - mq[i];
        kl += std::log(sq[i] / sp[i]) + (sp[i] * sp[i] + d * d) / (2.0 * sq[i] * sq[i]) - 0.5;
    }
    out.val[0] = kl;
    const int mp_id = mean_p.id, sp_id = std_p.id, mq_id = mean_q.id, sq_id = std_q.id;
    out.back = [=](Tape& tp, const Tape::Node& nd) {
        const double g = nd.grad[0];
        if (g == 0.0) return;
        const auto& mpv = tp.val(Var{mp_id});
        const auto& spv = tp.val(Var{sp_id});
        const auto& mqv = tp.val(Var{mq_id});
        const auto& sqv = tp.val(Var{sq_id});
        auto& gmp = tp.node(mp_id).grad;
        auto& gsp = tp.node(sp_id).grad;
        auto& gmq = tp.node(mq_id).grad;
        auto& gsq = tp.node(sq_id).grad;
        for (std::size_t i = 0; i < mpv.size(); ++i) {
            const double d = mpv[i] - mqv[i];
            const double q2 = sqv[i] * sqv[i];
            gmp[i] += g * d / q2;
            gmq[i] -= g * d / q2;
            gsp[i] += g * (-1.0 / spv[i] + spv[i] / q2);
            gsq[i] += g * (1.0 / sqv[i] - (spv[i] * spv[i] + d * d) / (q2 * sqv[i]));
        }
    };
    return Var{t.last_id()};
}

Var bernoulli_ll_op(Tape& t, const Tensor& target, Var logits) {
    if (target.shape.numel() != t.shape(logits).numel())
        throw DimensionError("bernoulli_log_likelihood: target/logit shape mismatch");
    for (double x : target.data)
        if (!(x >= 0.0 && x <= 1.0))
            throw ContractError("bernoulli_log_likelihood: target outside [0,1]");

    Tape::Node& out = t.make(Shape{1});
    const auto& lv = t.val(logits);
    double ll = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i)
        ll += target.data[i] * lv[i] - stable_softplus(lv[i]);
    out.val[0] = ll;
    const int l_id = logits.id;
    auto tgt = std::make_shared<std::vector<double>>(target.data);
    out.back = [=](Tape& tp, const Tape::Node& n) {
        const double g = n.grad[0];
        if (g == 0.0) return;
        const auto& lv2 = tp.val(Var{l_id});
        auto& gl = tp.node(l_id).grad;
        for (std::size_t i = 0; i < lv2.size(); ++i)
            gl[i] += g * ((*tgt)[i] - stable_sigmoid(lv2[i]));
    };
    return Var{t.last_id()};
}

}  // namespace voe::num
