#include "modcomp/model.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"
#include "modcomp/lora.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <random>
#include <type_traits>

namespace modcomp {

namespace {

constexpr float kInitStd = 0.02f;
constexpr double kNormEps = 1e-5;
constexpr double kRopeBase = 10000.0;

// Layer matrices in canonical order; indices into the per-layer arrays below.
enum MatIdx { kQ = 0, kK, kV, kO, kGate, kUp, kDown, kNumMats };
enum ScaleIdx { kAttnScale = 0, kMlpScale, kNumScales };

ParamName mat_name(int layer, int i) {
    using G = ParamName::Group;
    using R = ParamName::Role;
    static constexpr R roles[kNumMats] = {R::q, R::k, R::v, R::o, R::gate, R::up, R::down};
    return ParamName::layer_param(layer, i < kGate ? G::mha : G::mlp, roles[i]);
}

ParamName scale_name(int layer, int j) {
    using R = ParamName::Role;
    return ParamName::layer_param(layer, ParamName::Group::norm,
                                  j == kAttnScale ? R::attn_scale : R::mlp_scale);
}


template <typename S>
using MatS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapS = Eigen::Map<MatS<S>>;
template <typename S>
using CMapS = Eigen::Map<const MatS<S>>;
using DynStride = Eigen::OuterStride<Eigen::Dynamic>;
template <typename S>
using HeadMap = Eigen::Map<MatS<S>, 0, DynStride>;
template <typename S>
using CHeadMap = Eigen::Map<const MatS<S>, 0, DynStride>;

// View of an f32 tensor as scalar S; owns a converted copy only when S != float.
template <typename S>
struct Buf {
    const S* data = nullptr;
    std::vector<S> own;
};

template <typename S>
Buf<S> view(const Tensor& t) {
    Buf<S> b;
    if constexpr (std::is_same_v<S, float>) {
        b.data = t.data();
    } else {
        b.own.assign(t.data(), t.data() + t.size());
        b.data = b.own.data();
    }
    return b;
}

template <typename S>
struct AdapterRef {
    bool present = false;
    Buf<S> a, b;
};

template <typename S>
struct LayerView {
    Buf<S> scale[kNumScales];
    Buf<S> w[kNumMats];
    AdapterRef<S> ad[kNumMats];
};

template <typename S>
struct ModelView {
    int L, D, H, hd, F, V, maxT;
    int rank = 0;
    S ad_scale = 0;
    Buf<S> embed, final_scale, unembed;
    std::vector<LayerView<S>> layers;
};

template <typename S>
ModelView<S> build_view(const ModelParams& p, const AdapterSet* adapters) {
    const ModelConfig& c = p.config;
    ModelView<S> mv;
    mv.L = c.n_layers;
    mv.D = c.d_model;
    mv.H = c.n_heads;
    mv.hd = c.head_dim();
    mv.F = c.d_ff;
    mv.V = c.vocab_size;
    mv.maxT = c.max_seq_len;
    mv.embed = view<S>(p.weights.at(ParamName::embed_tok()));
    mv.final_scale = view<S>(p.weights.at(ParamName::final_norm_scale()));
    mv.unembed = view<S>(p.weights.at(ParamName::unembed_proj()));
    if (adapters) {
        mv.rank = adapters->config.rank;
        mv.ad_scale = static_cast<S>(adapters->config.scale());
    }
    mv.layers.resize(c.n_layers);
    for (int l = 0; l < c.n_layers; ++l) {
        auto& lw = mv.layers[l];
        for (int j = 0; j < kNumScales; ++j) lw.scale[j] = view<S>(p.weights.at(scale_name(l, j)));
        for (int i = 0; i < kNumMats; ++i) {
            lw.w[i] = view<S>(p.weights.at(mat_name(l, i)));
            if (adapters) {
                if (const AdapterPair* pair = adapters->find(mat_name(l, i))) {
                    lw.ad[i].present = true;
                    lw.ad[i].a = view<S>(pair->a);
                    lw.ad[i].b = view<S>(pair->b);
                }
            }
        }
    }
    return mv;
}

// Per-sequence activation caches; backward scratch lives here too so buffers
// are reused across the items of a batch.
template <typename S>
struct SeqCache {
    int T = 0;
    struct Layer {
        std::vector<S> x_attn_in, a_norm, r_attn;
        std::vector<S> q, k, v;           // q, k post-rope
        std::vector<S> u[kNumMats];       // adapter inner products x*A^T
        std::vector<S> probs;             // [H * T * T]
        std::vector<S> ctx;
        std::vector<S> x_mlp_in, m_norm, r_mlp;
        std::vector<S> g_pre, silu_g, u_up, h_act;
    };
    std::vector<Layer> layers;
    std::vector<S> x;  // running activation, ends as final-norm input
    std::vector<S> x_final, f_norm, r_final;
    std::vector<S> logits;
    // backward scratch
    std::vector<S> dx, dmid, dq, dk, dv, dctx, dg, du, dh, dpair;
};

template <typename S>
void rmsnorm_fwd(const std::vector<S>& x, int T, int D, const S* scale,
                 std::vector<S>& y, std::vector<S>& r) {
    y.resize(static_cast<std::size_t>(T) * D);
    r.resize(T);
    for (int t = 0; t < T; ++t) {
        const S* xt = x.data() + static_cast<std::size_t>(t) * D;
        double ms = 0.0;
        for (int d = 0; d < D; ++d) ms += static_cast<double>(xt[d]) * xt[d];
        S rt = static_cast<S>(1.0 / std::sqrt(ms / D + kNormEps));
        r[t] = rt;
        S* yt = y.data() + static_cast<std::size_t>(t) * D;
        for (int d = 0; d < D; ++d) yt[d] = xt[d] * rt * scale[d];
    }
}

void rmsnorm_bwd(const float* x, const float* r, const float* scale, const float* dy,
                 int T, int D, float* dscale, float* dx_accum) {
    for (int t = 0; t < T; ++t) {
        const float* xt = x + static_cast<std::size_t>(t) * D;
        const float* dyt = dy + static_cast<std::size_t>(t) * D;
        float* dxt = dx_accum + static_cast<std::size_t>(t) * D;
        const float rt = r[t];
        double dot = 0.0;
        for (int d = 0; d < D; ++d) dot += static_cast<double>(dyt[d]) * scale[d] * xt[d];
        const float coef = static_cast<float>(rt * rt * rt * dot / D);
        for (int d = 0; d < D; ++d) {
            if (dscale) dscale[d] += dyt[d] * xt[d] * rt;
            dxt[d] += scale[d] * rt * dyt[d] - xt[d] * coef;
        }
    }
}

template <typename S>
void linear_fwd(const S* x, int T, int din, const S* w, int dout,
                const AdapterRef<S>& ad, int rank, S ad_scale,
                std::vector<S>& u_cache, std::vector<S>& y) {
    y.resize(static_cast<std::size_t>(T) * dout);
    MapS<S>(y.data(), T, dout).noalias() =
        CMapS<S>(x, T, din) * CMapS<S>(w, dout, din).transpose();
    if (ad.present) {
        u_cache.resize(static_cast<std::size_t>(T) * rank);
        MapS<S>(u_cache.data(), T, rank).noalias() =
            CMapS<S>(x, T, din) * CMapS<S>(ad.a.data, rank, din).transpose();
        MapS<S>(y.data(), T, dout).noalias() +=
            ad_scale * (CMapS<S>(u_cache.data(), T, rank) * CMapS<S>(ad.b.data, dout, rank).transpose());
    }
}

// dy flows into dW (and dA/dB when an adapter is attached) and back into dx.
void linear_bwd(const float* x, const float* dy, int T, int din, int dout, const float* w,
                float* dw, const AdapterRef<float>& ad, int rank, float ad_scale,
                const std::vector<float>& u_cache, float* da, float* db,
                std::vector<float>& dpair_scratch, float* dx_accum) {
    CMapS<float> x_m(x, T, din), dy_m(dy, T, dout);
    if (dw) MapS<float>(dw, dout, din).noalias() += dy_m.transpose() * x_m;
    if (dx_accum) {
        MapS<float>(dx_accum, T, din).noalias() += dy_m * CMapS<float>(w, dout, din);
    }
    if (ad.present) {
        CMapS<float> u_m(u_cache.data(), T, rank);
        CMapS<float> a_m(ad.a.data, rank, din), b_m(ad.b.data, dout, rank);
        if (db) MapS<float>(db, dout, rank).noalias() += ad_scale * (dy_m.transpose() * u_m);
        dpair_scratch.resize(static_cast<std::size_t>(T) * rank);
        MapS<float> du_m(dpair_scratch.data(), T, rank);
        du_m.noalias() = ad_scale * (dy_m * b_m);
        if (da) MapS<float>(da, rank, din).noalias() += du_m.transpose() * x_m;
        if (dx_accum) MapS<float>(dx_accum, T, din).noalias() += du_m * a_m;
    }
}

template <typename S>
void rope_inplace(S* qk, int T, int H, int hd, bool inverse) {
    const int half = hd / 2;
    const int D = H * hd;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < half; ++i) {
            const double theta = t * std::pow(kRopeBase, -2.0 * i / hd);
            const S c = static_cast<S>(std::cos(theta));
            S s = static_cast<S>(std::sin(theta));
            if (inverse) s = -s;
            for (int h = 0; h < H; ++h) {
                S* p = qk + static_cast<std::size_t>(t) * D + h * hd + 2 * i;
                const S p0 = p[0], p1 = p[1];
                p[0] = p0 * c - p1 * s;
                p[1] = p0 * s + p1 * c;
            }
        }
    }
}

template <typename S>
void seq_forward(const ModelView<S>& mv, const std::vector<int>& toks, SeqCache<S>& c) {
    const int T = static_cast<int>(toks.size());
    const int D = mv.D, H = mv.H, hd = mv.hd, F = mv.F, V = mv.V;
    c.T = T;
    c.layers.resize(mv.L);
    c.x.resize(static_cast<std::size_t>(T) * D);
    for (int t = 0; t < T; ++t) {
        std::memcpy(c.x.data() + static_cast<std::size_t>(t) * D,
                    mv.embed.data + static_cast<std::size_t>(toks[t]) * D, sizeof(S) * D);
    }
    const S inv_sqrt_hd = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));
    for (int l = 0; l < mv.L; ++l) {
        const auto& lw = mv.layers[l];
        auto& lc = c.layers[l];
        lc.x_attn_in = c.x;
        rmsnorm_fwd(lc.x_attn_in, T, D, lw.scale[kAttnScale].data, lc.a_norm, lc.r_attn);
        linear_fwd(lc.a_norm.data(), T, D, lw.w[kQ].data, D, lw.ad[kQ], mv.rank, mv.ad_scale, lc.u[kQ], lc.q);
        linear_fwd(lc.a_norm.data(), T, D, lw.w[kK].data, D, lw.ad[kK], mv.rank, mv.ad_scale, lc.u[kK], lc.k);
        linear_fwd(lc.a_norm.data(), T, D, lw.w[kV].data, D, lw.ad[kV], mv.rank, mv.ad_scale, lc.u[kV], lc.v);
        rope_inplace(lc.q.data(), T, H, hd, false);
        rope_inplace(lc.k.data(), T, H, hd, false);
        lc.probs.assign(static_cast<std::size_t>(H) * T * T, S(0));
        lc.ctx.resize(static_cast<std::size_t>(T) * D);
        for (int h = 0; h < H; ++h) {
            CHeadMap<S> q_h(lc.q.data() + h * hd, T, hd, DynStride(D));
            CHeadMap<S> k_h(lc.k.data() + h * hd, T, hd, DynStride(D));
            CHeadMap<S> v_h(lc.v.data() + h * hd, T, hd, DynStride(D));
            MapS<S> p_m(lc.probs.data() + static_cast<std::size_t>(h) * T * T, T, T);
            p_m.noalias() = q_h * k_h.transpose() * inv_sqrt_hd;
            for (int t = 0; t < T; ++t) {
                S* row = p_m.data() + static_cast<std::size_t>(t) * T;
                S mx = row[0];
                for (int u = 1; u <= t; ++u) mx = std::max(mx, row[u]);
                double denom = 0.0;
                for (int u = 0; u <= t; ++u) {
                    row[u] = static_cast<S>(std::exp(static_cast<double>(row[u] - mx)));
                    denom += row[u];
                }
                const S inv = static_cast<S>(1.0 / denom);
                for (int u = 0; u <= t; ++u) row[u] *= inv;
                for (int u = t + 1; u < T; ++u) row[u] = S(0);
            }
            HeadMap<S> ctx_h(lc.ctx.data() + h * hd, T, hd, DynStride(D));
            ctx_h.noalias() = p_m * v_h;
        }
        std::vector<S> attn_out;
        linear_fwd(lc.ctx.data(), T, D, lw.w[kO].data, D, lw.ad[kO], mv.rank, mv.ad_scale, lc.u[kO], attn_out);
        for (std::size_t i = 0; i < c.x.size(); ++i) c.x[i] += attn_out[i];

        lc.x_mlp_in = c.x;
        rmsnorm_fwd(lc.x_mlp_in, T, D, lw.scale[kMlpScale].data, lc.m_norm, lc.r_mlp);
        linear_fwd(lc.m_norm.data(), T, D, lw.w[kGate].data, F, lw.ad[kGate], mv.rank, mv.ad_scale, lc.u[kGate], lc.g_pre);
        linear_fwd(lc.m_norm.data(), T, D, lw.w[kUp].data, F, lw.ad[kUp], mv.rank, mv.ad_scale, lc.u[kUp], lc.u_up);
        const std::size_t nf = static_cast<std::size_t>(T) * F;
        lc.silu_g.resize(nf);
        lc.h_act.resize(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const S g = lc.g_pre[i];
            const S sig = static_cast<S>(1.0 / (1.0 + std::exp(static_cast<double>(-g))));
            lc.silu_g[i] = g * sig;
            lc.h_act[i] = lc.silu_g[i] * lc.u_up[i];
        }
        std::vector<S> mlp_out;
        linear_fwd(lc.h_act.data(), T, F, lw.w[kDown].data, D, lw.ad[kDown], mv.rank, mv.ad_scale, lc.u[kDown], mlp_out);
        for (std::size_t i = 0; i < c.x.size(); ++i) c.x[i] += mlp_out[i];
    }
    c.x_final = c.x;
    rmsnorm_fwd(c.x_final, T, D, mv.final_scale.data, c.f_norm, c.r_final);
    c.logits.resize(static_cast<std::size_t>(T) * V);
    MapS<S>(c.logits.data(), T, V).noalias() =
        CMapS<S>(c.f_norm.data(), T, D) * CMapS<S>(mv.unembed.data, V, D).transpose();
}

// Gradient destinations; null pointers mean the gradient is not requested.
struct GradPtrs {
    float* embed = nullptr;
    float* final_scale = nullptr;
    float* unembed = nullptr;
    struct Layer {
        float* scale[kNumScales] = {};
        float* w[kNumMats] = {};
        float* ad_a[kNumMats] = {};
        float* ad_b[kNumMats] = {};
    };
    std::vector<Layer> layers;
};

void seq_backward(const ModelView<float>& mv, const std::vector<int>& toks,
                  SeqCache<float>& c, const std::vector<float>& dlogits, GradPtrs& gp) {
    const int T = c.T, D = mv.D, H = mv.H, hd = mv.hd, F = mv.F, V = mv.V;
    const std::size_t nd = static_cast<std::size_t>(T) * D;
    const float inv_sqrt_hd = 1.0f / std::sqrt(static_cast<float>(hd));

    if (gp.unembed) {
        MapS<float>(gp.unembed, V, D).noalias() +=
            CMapS<float>(dlogits.data(), T, V).transpose() * CMapS<float>(c.f_norm.data(), T, D);
    }
    c.dx.assign(nd, 0.0f);
    {
        std::vector<float>& df = c.dmid;
        df.resize(nd);
        MapS<float>(df.data(), T, D).noalias() =
            CMapS<float>(dlogits.data(), T, V) * CMapS<float>(mv.unembed.data, V, D);
        rmsnorm_bwd(c.x_final.data(), c.r_final.data(), mv.final_scale.data, df.data(), T, D,
                    gp.final_scale, c.dx.data());
    }

    AdapterRef<float> no_ad;
    for (int l = mv.L - 1; l >= 0; --l) {
        const auto& lw = mv.layers[l];
        auto& lc = c.layers[l];
        auto& gl = gp.layers[l];

        // mlp sublayer: dx holds dL/d(layer output)
        c.dh.assign(static_cast<std::size_t>(T) * F, 0.0f);
        linear_bwd(lc.h_act.data(), c.dx.data(), T, F, D, lw.w[kDown].data, gl.w[kDown],
                   lw.ad[kDown], mv.rank, mv.ad_scale, lc.u[kDown], gl.ad_a[kDown], gl.ad_b[kDown],
                   c.dpair, c.dh.data());
        const std::size_t nf = static_cast<std::size_t>(T) * F;
        c.dg.resize(nf);
        c.du.resize(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            const float g = lc.g_pre[i];
            const float sig = 1.0f / (1.0f + std::exp(-g));
            c.du[i] = c.dh[i] * lc.silu_g[i];
            c.dg[i] = c.dh[i] * lc.u_up[i] * sig * (1.0f + g * (1.0f - sig));
        }
        c.dmid.assign(nd, 0.0f);
        linear_bwd(lc.m_norm.data(), c.dg.data(), T, D, F, lw.w[kGate].data, gl.w[kGate],
                   lw.ad[kGate], mv.rank, mv.ad_scale, lc.u[kGate], gl.ad_a[kGate], gl.ad_b[kGate],
                   c.dpair, c.dmid.data());
        linear_bwd(lc.m_norm.data(), c.du.data(), T, D, F, lw.w[kUp].data, gl.w[kUp],
                   lw.ad[kUp], mv.rank, mv.ad_scale, lc.u[kUp], gl.ad_a[kUp], gl.ad_b[kUp],
                   c.dpair, c.dmid.data());
        // skip connection: dx passes through, norm path adds to it
        rmsnorm_bwd(lc.x_mlp_in.data(), lc.r_mlp.data(), lw.scale[kMlpScale].data, c.dmid.data(),
                    T, D, gl.scale[kMlpScale], c.dx.data());

        // attention sublayer
        c.dctx.assign(nd, 0.0f);
        linear_bwd(lc.ctx.data(), c.dx.data(), T, D, D, lw.w[kO].data, gl.w[kO],
                   lw.ad[kO], mv.rank, mv.ad_scale, lc.u[kO], gl.ad_a[kO], gl.ad_b[kO],
                   c.dpair, c.dctx.data());
        c.dq.assign(nd, 0.0f);
        c.dk.assign(nd, 0.0f);
        c.dv.assign(nd, 0.0f);
        MatS<float> dp(T, T), ds(T, T);
        for (int h = 0; h < H; ++h) {
            CHeadMap<float> q_h(lc.q.data() + h * hd, T, hd, DynStride(D));
            CHeadMap<float> k_h(lc.k.data() + h * hd, T, hd, DynStride(D));
            CHeadMap<float> v_h(lc.v.data() + h * hd, T, hd, DynStride(D));
            CMapS<float> p_m(lc.probs.data() + static_cast<std::size_t>(h) * T * T, T, T);
            CHeadMap<float> dctx_h(c.dctx.data() + h * hd, T, hd, DynStride(D));
            HeadMap<float> dq_h(c.dq.data() + h * hd, T, hd, DynStride(D));
            HeadMap<float> dk_h(c.dk.data() + h * hd, T, hd, DynStride(D));
            HeadMap<float> dv_h(c.dv.data() + h * hd, T, hd, DynStride(D));
            dp.noalias() = dctx_h * v_h.transpose();
            dv_h.noalias() = p_m.transpose() * dctx_h;
            for (int t = 0; t < T; ++t) {
                double rowdot = 0.0;
                for (int u = 0; u <= t; ++u) rowdot += static_cast<double>(p_m(t, u)) * dp(t, u);
                for (int u = 0; u <= t; ++u) {
                    ds(t, u) = p_m(t, u) * (dp(t, u) - static_cast<float>(rowdot));
                }
                for (int u = t + 1; u < T; ++u) ds(t, u) = 0.0f;
            }
            dq_h.noalias() = ds * k_h * inv_sqrt_hd;
            dk_h.noalias() = ds.transpose() * q_h * inv_sqrt_hd;
        }
        rope_inplace(c.dq.data(), T, H, hd, true);
        rope_inplace(c.dk.data(), T, H, hd, true);
        c.dmid.assign(nd, 0.0f);
        linear_bwd(lc.a_norm.data(), c.dq.data(), T, D, D, lw.w[kQ].data, gl.w[kQ],
                   lw.ad[kQ], mv.rank, mv.ad_scale, lc.u[kQ], gl.ad_a[kQ], gl.ad_b[kQ],
                   c.dpair, c.dmid.data());
        linear_bwd(lc.a_norm.data(), c.dk.data(), T, D, D, lw.w[kK].data, gl.w[kK],
                   lw.ad[kK], mv.rank, mv.ad_scale, lc.u[kK], gl.ad_a[kK], gl.ad_b[kK],
                   c.dpair, c.dmid.data());
        linear_bwd(lc.a_norm.data(), c.dv.data(), T, D, D, lw.w[kV].data, gl.w[kV],
                   lw.ad[kV], mv.rank, mv.ad_scale, lc.u[kV], gl.ad_a[kV], gl.ad_b[kV],
                   c.dpair, c.dmid.data());
        rmsnorm_bwd(lc.x_attn_in.data(), lc.r_attn.data(), lw.scale[kAttnScale].data,
                    c.dmid.data(), T, D, gl.scale[kAttnScale], c.dx.data());
    }
    if (gp.embed) {
        for (int t = 0; t < T; ++t) {
            float* row = gp.embed + static_cast<std::size_t>(toks[t]) * D;
            const float* dxt = c.dx.data() + static_cast<std::size_t>(t) * D;
            for (int d = 0; d < D; ++d) row[d] += dxt[d];
        }
    }
}

void check_tokens(const ModelConfig& cfg, const std::vector<int>& toks) {
    if (toks.empty()) throw DataError("empty token sequence");
    if (static_cast<int>(toks.size()) > cfg.max_seq_len) {
        throw ShapeError("sequence length " + std::to_string(toks.size()) + " exceeds max_seq_len " +
                         std::to_string(cfg.max_seq_len));
    }
    for (int t : toks) {
        if (t < 0 || t >= cfg.vocab_size) throw DataError("token id out of vocabulary: " + std::to_string(t));
    }
}

// Next-token targets: logits row t scores tokens[t+1], supervised iff mask[t+1].
void item_targets(const TrainItem& item, std::vector<int>& targets, std::vector<std::uint8_t>& tmask) {
    const int T = static_cast<int>(item.tokens.size());
    targets.assign(T, 0);
    tmask.assign(T, 0);
    for (int t = 0; t + 1 < T; ++t) {
        targets[t] = item.tokens[t + 1];
        tmask[t] = item.mask[t + 1];
    }
}

template <typename S>
double batch_loss_impl(const ModelParams& params, const Batch& batch, const AdapterSet* adapters) {
    if (batch.items.empty()) throw DataError("empty batch");
    ModelView<S> mv = build_view<S>(params, adapters);
    SeqCache<S> cache;
    std::vector<int> targets;
    std::vector<std::uint8_t> tmask;
    double total = 0.0;
    std::int64_t count = 0;
    for (const TrainItem& item : batch.items) {
        check_tokens(params.config, item.tokens);
        if (item.mask.size() != item.tokens.size()) throw DataError("mask length mismatch");
        seq_forward(mv, item.tokens, cache);
        item_targets(item, targets, tmask);
        const int T = cache.T, V = mv.V;
        for (int t = 0; t < T; ++t) {
            if (!tmask[t]) continue;
            const S* row = cache.logits.data() + static_cast<std::size_t>(t) * V;
            S mx = row[0];
            for (int v = 1; v < V; ++v) mx = std::max(mx, row[v]);
            double denom = 0.0;
            for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(row[v] - mx));
            total += std::log(denom) - static_cast<double>(row[targets[t]] - mx);
            ++count;
        }
    }
    if (count == 0) throw DataError("batch has no supervised positions");
    return total / static_cast<double>(count);
}

}  // namespace

void ModelConfig::validate() const {
    if (n_layers < 4) throw ConfigError("n_layers must be >= 4");
    if (d_model <= 0 || n_heads <= 0 || d_ff <= 0) throw ConfigError("model dimensions must be positive");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if ((d_model / n_heads) % 2 != 0) throw ConfigError("head dimension must be even for rotary pairs");
    if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
    if (max_seq_len < 16) throw ConfigError("max_seq_len must be >= 16");
}

bool ModelConfig::operator==(const ModelConfig& o) const {
    return n_layers == o.n_layers && d_model == o.d_model && n_heads == o.n_heads &&
           d_ff == o.d_ff && vocab_size == o.vocab_size && max_seq_len == o.max_seq_len &&
           seed == o.seed;
}

std::vector<ParamName> registry_names(const ModelConfig& cfg) {
    std::vector<ParamName> names;
    names.push_back(ParamName::embed_tok());
    for (int l = 0; l < cfg.n_layers; ++l) {
        names.push_back(scale_name(l, kAttnScale));
        for (int i = kQ; i <= kO; ++i) names.push_back(mat_name(l, i));
        names.push_back(scale_name(l, kMlpScale));
        for (int i = kGate; i <= kDown; ++i) names.push_back(mat_name(l, i));
    }
    names.push_back(ParamName::final_norm_scale());
    names.push_back(ParamName::unembed_proj());
    return names;
}

std::vector<int> param_shape(const ModelConfig& cfg, const ParamName& name) {
    using B = ParamName::Block;
    using R = ParamName::Role;
    if (name.lora != ParamName::LoraPart::none) {
        throw ConfigError("param_shape covers base registry names only: " + name.str());
    }
    switch (name.block) {
        case B::embed:
        case B::unembed:
            return {cfg.vocab_size, cfg.d_model};
        case B::final_norm:
            return {cfg.d_model};
        case B::layer: {
            if (name.layer < 0 || name.layer >= cfg.n_layers) {
                throw ConfigError("layer index out of range: " + name.str());
            }
            switch (name.role) {
                case R::attn_scale:
                case R::mlp_scale:
                    return {cfg.d_model};
                case R::q:
                case R::k:
                case R::v:
                case R::o:
                    return {cfg.d_model, cfg.d_model};
                case R::gate:
                case R::up:
                    return {cfg.d_ff, cfg.d_model};
                case R::down:
                    return {cfg.d_model, cfg.d_ff};
                default:
                    break;
            }
            break;
        }
    }
    throw ConfigError("no shape for parameter name: " + name.str());
}

ModelParams init_model(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    for (const ParamName& name : registry_names(cfg)) {
        Tensor t(param_shape(cfg, name));
        const bool is_scale = name.role == ParamName::Role::scale ||
                              name.role == ParamName::Role::attn_scale ||
                              name.role == ParamName::Role::mlp_scale;
        if (is_scale) {
            for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = 1.0f;
        } else {
            // Seed folds in the canonical name so draws are independent of
            // registry iteration order.
            const std::uint64_t h = fnv1a64(name.str());
            std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                              static_cast<std::uint32_t>(h),
                              static_cast<std::uint32_t>(h >> 32)};
            std::mt19937 gen(seq);
            std::normal_distribution<float> dist(0.0f, kInitStd);
            for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = dist(gen);
        }
        p.weights.emplace(name, std::move(t));
    }
    return p;
}

Tensor forward_logits(const ModelParams& params, const std::vector<int>& tokens,
                      const AdapterSet* adapters) {
    check_tokens(params.config, tokens);
    ModelView<float> mv = build_view<float>(params, adapters);
    SeqCache<float> cache;
    seq_forward(mv, tokens, cache);
    return Tensor({cache.T, mv.V}, std::move(cache.logits));
}

double loss_and_grads(const ModelParams& params, const Batch& batch, GradMap* grads,
                      const AdapterSet* adapters, GradMap* adapter_grads) {
    if (batch.items.empty()) throw DataError("empty batch");
    const ModelConfig& cfg = params.config;
    ModelView<float> mv = build_view<float>(params, adapters);

    if (grads) {
        grads->clear();
        for (const ParamName& name : registry_names(cfg)) {
            grads->emplace(name, Tensor(param_shape(cfg, name)));
        }
    }
    if (adapter_grads) {
        adapter_grads->clear();
        if (adapters) {
            for (const auto& [name, pair] : adapters->pairs) {
                adapter_grads->emplace(name.with_lora(ParamName::LoraPart::a), Tensor(pair.a.shape()));
                adapter_grads->emplace(name.with_lora(ParamName::LoraPart::b), Tensor(pair.b.shape()));
            }
        }
    }
    GradPtrs gp;
    gp.layers.resize(cfg.n_layers);
    if (grads) {
        gp.embed = grads->at(ParamName::embed_tok()).data();
        gp.final_scale = grads->at(ParamName::final_norm_scale()).data();
        gp.unembed = grads->at(ParamName::unembed_proj()).data();
        for (int l = 0; l < cfg.n_layers; ++l) {
            for (int j = 0; j < kNumScales; ++j) gp.layers[l].scale[j] = grads->at(scale_name(l, j)).data();
            for (int i = 0; i < kNumMats; ++i) gp.layers[l].w[i] = grads->at(mat_name(l, i)).data();
        }
    }
    if (adapter_grads && adapters) {
        for (int l = 0; l < cfg.n_layers; ++l) {
            for (int i = 0; i < kNumMats; ++i) {
                auto ita = adapter_grads->find(mat_name(l, i).with_lora(ParamName::LoraPart::a));
                if (ita != adapter_grads->end()) {
                    gp.layers[l].ad_a[i] = ita->second.data();
                    gp.layers[l].ad_b[i] =
                        adapter_grads->at(mat_name(l, i).with_lora(ParamName::LoraPart::b)).data();
                }
            }
        }
    }

    // Pooled mean: every supervised position weighs equally across the batch,
    // so count positions first and scale each sequence's dlogits by 1/total.
    std::vector<std::vector<int>> all_targets(batch.items.size());
    std::vector<std::vector<std::uint8_t>> all_tmask(batch.items.size());
    std::int64_t total_count = 0;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        const TrainItem& item = batch.items[i];
        check_tokens(cfg, item.tokens);
        if (item.mask.size() != item.tokens.size()) throw DataError("mask length mismatch");
        item_targets(item, all_targets[i], all_tmask[i]);
        for (std::uint8_t m : all_tmask[i]) total_count += m;
    }
    if (total_count == 0) throw DataError("batch has no supervised positions");
    const float inv_total = 1.0f / static_cast<float>(total_count);

    SeqCache<float> cache;
    std::vector<float> dlogits;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        const TrainItem& item = batch.items[i];
        seq_forward(mv, item.tokens, cache);
        const int T = cache.T, V = mv.V;
        dlogits.assign(static_cast<std::size_t>(T) * V, 0.0f);
        for (int t = 0; t < T; ++t) {
            if (!all_tmask[i][t]) continue;
            const float* row = cache.logits.data() + static_cast<std::size_t>(t) * V;
            float mx = row[0];
            for (int v = 1; v < V; ++v) mx = std::max(mx, row[v]);
            double denom = 0.0;
            for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(row[v] - mx));
            const int gold = all_targets[i][t];
            loss_sum += std::log(denom) - static_cast<double>(row[gold] - mx);
            float* drow = dlogits.data() + static_cast<std::size_t>(t) * V;
            for (int v = 0; v < V; ++v) {
                const float pv = static_cast<float>(std::exp(static_cast<double>(row[v] - mx)) / denom);
                drow[v] = (pv - (v == gold ? 1.0f : 0.0f)) * inv_total;
            }
        }
        if (grads || adapter_grads) seq_backward(mv, item.tokens, cache, dlogits, gp);
    }
    const double loss = loss_sum / static_cast<double>(total_count);
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
    return loss;
}

double batch_loss_f64(const ModelParams& params, const Batch& batch, const AdapterSet* adapters) {
    return batch_loss_impl<double>(params, batch, adapters);
}

}  // namespace modcomp
