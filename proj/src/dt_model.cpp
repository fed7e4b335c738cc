#include "madda/dt_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace madda {

using nlohmann::json;

std::vector<std::vector<double>> causal_attention(
    const std::vector<std::vector<double>>& q,
    const std::vector<std::vector<double>>& k,
    const std::vector<std::vector<double>>& v) {
    const std::size_t w = q.size();
    if (k.size() != w || v.size() != w)
        throw std::invalid_argument("causal_attention: mismatched token counts");
    if (w == 0) throw std::invalid_argument("causal_attention: empty sequence");
    const std::size_t d = q.front().size();
    std::vector<std::vector<double>> z(w, std::vector<double>(v.front().size(), 0.0));
    std::vector<double> scores;
    for (std::size_t o = 0; o < w; ++o) {
        scores.assign(o + 1, 0.0);
        double maxs = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= o; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += q[o][i] * k[j][i];
            scores[j] = s;
            maxs = std::max(maxs, s);
        }
        double total = 0.0;
        for (std::size_t j = 0; j <= o; ++j) {
            scores[j] = std::exp(scores[j] - maxs);
            total += scores[j];
        }
        for (std::size_t j = 0; j <= o; ++j) {
            double wgt = scores[j] / total;
            for (std::size_t i = 0; i < z[o].size(); ++i) z[o][i] += wgt * v[j][i];
        }
    }
    return z;
}

namespace {

struct Block {
    int ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    int ln2_g, ln2_b, w1, b1, w2, b2;
};

// Flat parameter offsets for one model configuration.
struct Layout {
    int H, S, M;  // embed dim, state dim, mlp dim (4H)
    int embed_r_w, embed_r_b, embed_s_w, embed_s_b, embed_a_w, embed_a_b;
    int pos;
    int ln_in_g, ln_in_b;
    std::vector<Block> blocks;
    int lnf_g, lnf_b, head_w, head_b;
    int total;

    explicit Layout(const DtConfig& cfg) {
        H = cfg.embed_dim;
        S = cfg.state_dim;
        M = 4 * H;
        int o = 0;
        auto take = [&](int n) { int at = o; o += n; return at; };
        embed_r_w = take(H);
        embed_r_b = take(H);
        embed_s_w = take(H * S);
        embed_s_b = take(H);
        embed_a_w = take(H);
        embed_a_b = take(H);
        pos = take(cfg.max_timesteps * H);
        ln_in_g = take(H);
        ln_in_b = take(H);
        blocks.resize(cfg.layers);
        for (auto& b : blocks) {
            b.ln1_g = take(H);
            b.ln1_b = take(H);
            b.wq = take(H * H);
            b.bq = take(H);
            b.wk = take(H * H);
            b.bk = take(H);
            b.wv = take(H * H);
            b.bv = take(H);
            b.wo = take(H * H);
            b.bo = take(H);
            b.ln2_g = take(H);
            b.ln2_b = take(H);
            b.w1 = take(M * H);
            b.b1 = take(M);
            b.w2 = take(H * M);
            b.b2 = take(H);
        }
        lnf_g = take(H);
        lnf_b = take(H);
        head_w = take(H);
        head_b = take(1);
        total = o;
    }
};

constexpr double kLnEps = 1e-5;

void ln_fwd(const double* x, const double* g, const double* b, int n, double* y,
            double* mean_out, double* rstd_out) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x[i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= n;
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    for (int i = 0; i < n; ++i) y[i] = g[i] * (x[i] - mean) * rstd + b[i];
    *mean_out = mean;
    *rstd_out = rstd;
}

void ln_bwd(const double* x, const double* g, int n, double mean, double rstd,
            const double* dy, double* dx_add, double* dg, double* db) {
    double sum_a = 0.0, sum_ax = 0.0;
    for (int i = 0; i < n; ++i) {
        double xhat = (x[i] - mean) * rstd;
        double a = dy[i] * g[i];
        sum_a += a;
        sum_ax += a * xhat;
        dg[i] += dy[i] * xhat;
        db[i] += dy[i];
    }
    sum_a /= n;
    sum_ax /= n;
    for (int i = 0; i < n; ++i) {
        double xhat = (x[i] - mean) * rstd;
        dx_add[i] += rstd * (dy[i] * g[i] - sum_a - xhat * sum_ax);
    }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }
double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
           x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// y[out] = W[out x in] * x + b
void linear_fwd(const double* W, const double* b, const double* x, int out, int in,
                double* y) {
    for (int o = 0; o < out; ++o) {
        double s = b[o];
        const double* row = W + static_cast<std::ptrdiff_t>(o) * in;
        for (int i = 0; i < in; ++i) s += row[i] * x[i];
        y[o] = s;
    }
}

void linear_bwd(const double* W, const double* x, const double* dy, int out, int in,
                double* dW, double* db, double* dx_add) {
    for (int o = 0; o < out; ++o) {
        double d = dy[o];
        db[o] += d;
        double* drow = dW + static_cast<std::ptrdiff_t>(o) * in;
        const double* row = W + static_cast<std::ptrdiff_t>(o) * in;
        for (int i = 0; i < in; ++i) {
            drow[i] += d * x[i];
            if (dx_add) dx_add[i] += row[i] * d;
        }
    }
}

struct BlockCache {
    std::vector<double> x_in, ln1, q, k, v, att, attnout, xa, ln2, mlp_pre, mlp_act;
    std::vector<double> ln1_mean, ln1_rstd, ln2_mean, ln2_rstd;
};

struct ForwardCache {
    int w = 0;                         // token count
    std::vector<int> token_timestep;   // per token, window-relative timestep
    std::vector<double> embedded;      // pre input-LN
    std::vector<double> x0;            // post input-LN
    std::vector<double> ln_in_mean, ln_in_rstd;
    std::vector<BlockCache> blocks;
    std::vector<double> x_final;       // input to final LN
    std::vector<double> lnf;           // post final LN
    std::vector<double> lnf_mean, lnf_rstd;
    std::vector<double> preds;         // per state token
    std::vector<int> state_token_pos;
};

void run_forward(const DtConfig& cfg, const Layout& L, const double* P,
                 const DtWindow& win, ForwardCache& C) {
    const int T = static_cast<int>(win.states.size());
    if (T < 1) throw std::invalid_argument("dt forward: empty window");
    if (static_cast<int>(win.rtg.size()) != T ||
        static_cast<int>(win.timesteps.size()) != T)
        throw std::invalid_argument("dt forward: inconsistent window lengths");
    const bool full = win.actions.size() == static_cast<std::size_t>(T);
    if (!full && win.actions.size() + 1 != static_cast<std::size_t>(T))
        throw std::invalid_argument("dt forward: bad action count");

    const int H = L.H;
    const int w = full ? 3 * T : 3 * T - 1;
    C.w = w;
    C.token_timestep.resize(w);
    C.embedded.assign(static_cast<std::size_t>(w) * H, 0.0);
    C.state_token_pos.clear();

    for (int i = 0; i < w; ++i) {
        int t = i / 3;
        int kind = i % 3;
        double* e = C.embedded.data() + static_cast<std::size_t>(i) * H;
        if (kind == 0) {
            for (int h = 0; h < H; ++h)
                e[h] = P[L.embed_r_w + h] * win.rtg[t] + P[L.embed_r_b + h];
        } else if (kind == 1) {
            double scaled[8];
            for (int d = 0; d < L.S; ++d)
                scaled[d] = win.states[t][d] / cfg.state_scale[d];
            linear_fwd(P + L.embed_s_w, P + L.embed_s_b, scaled, H, L.S, e);
            C.state_token_pos.push_back(i);
        } else {
            for (int h = 0; h < H; ++h)
                e[h] = P[L.embed_a_w + h] * win.actions[t] + P[L.embed_a_b + h];
        }
        int ts = std::clamp(win.timesteps[t] - 1, 0, cfg.max_timesteps - 1);
        C.token_timestep[i] = ts;
        const double* pe = P + L.pos + static_cast<std::size_t>(ts) * H;
        for (int h = 0; h < H; ++h) e[h] += pe[h];
    }

    C.x0.assign(static_cast<std::size_t>(w) * H, 0.0);
    C.ln_in_mean.assign(w, 0.0);
    C.ln_in_rstd.assign(w, 0.0);
    for (int i = 0; i < w; ++i)
        ln_fwd(C.embedded.data() + static_cast<std::size_t>(i) * H, P + L.ln_in_g,
               P + L.ln_in_b, H, C.x0.data() + static_cast<std::size_t>(i) * H,
               &C.ln_in_mean[i], &C.ln_in_rstd[i]);

    const double scale = 1.0 / std::sqrt(static_cast<double>(H));
    C.blocks.resize(L.blocks.size());
    std::vector<double> x = C.x0;
    for (std::size_t bi = 0; bi < L.blocks.size(); ++bi) {
        const Block& B = L.blocks[bi];
        BlockCache& bc = C.blocks[bi];
        bc.x_in = x;
        auto wh = static_cast<std::size_t>(w) * H;
        bc.ln1.assign(wh, 0.0);
        bc.ln1_mean.assign(w, 0.0);
        bc.ln1_rstd.assign(w, 0.0);
        for (int i = 0; i < w; ++i)
            ln_fwd(bc.x_in.data() + static_cast<std::size_t>(i) * H, P + B.ln1_g,
                   P + B.ln1_b, H, bc.ln1.data() + static_cast<std::size_t>(i) * H,
                   &bc.ln1_mean[i], &bc.ln1_rstd[i]);
        bc.q.assign(wh, 0.0);
        bc.k.assign(wh, 0.0);
        bc.v.assign(wh, 0.0);
        for (int i = 0; i < w; ++i) {
            const double* xin = bc.ln1.data() + static_cast<std::size_t>(i) * H;
            linear_fwd(P + B.wq, P + B.bq, xin, H, H,
                       bc.q.data() + static_cast<std::size_t>(i) * H);
            linear_fwd(P + B.wk, P + B.bk, xin, H, H,
                       bc.k.data() + static_cast<std::size_t>(i) * H);
            linear_fwd(P + B.wv, P + B.bv, xin, H, H,
                       bc.v.data() + static_cast<std::size_t>(i) * H);
        }
        bc.att.assign(static_cast<std::size_t>(w) * w, 0.0);
        bc.attnout.assign(wh, 0.0);
        for (int o = 0; o < w; ++o) {
            double* arow = bc.att.data() + static_cast<std::size_t>(o) * w;
            const double* qo = bc.q.data() + static_cast<std::size_t>(o) * H;
            double maxs = -std::numeric_limits<double>::infinity();
            for (int j = 0; j <= o; ++j) {
                const double* kj = bc.k.data() + static_cast<std::size_t>(j) * H;
                double s = 0.0;
                for (int h = 0; h < H; ++h) s += qo[h] * kj[h];
                arow[j] = s * scale;
                maxs = std::max(maxs, arow[j]);
            }
            double total = 0.0;
            for (int j = 0; j <= o; ++j) {
                arow[j] = std::exp(arow[j] - maxs);
                total += arow[j];
            }
            double* zo = bc.attnout.data() + static_cast<std::size_t>(o) * H;
            for (int j = 0; j <= o; ++j) {
                arow[j] /= total;
                const double* vj = bc.v.data() + static_cast<std::size_t>(j) * H;
                for (int h = 0; h < H; ++h) zo[h] += arow[j] * vj[h];
            }
        }
        bc.xa.assign(wh, 0.0);
        std::vector<double> proj(H);
        for (int i = 0; i < w; ++i) {
            linear_fwd(P + B.wo, P + B.bo,
                       bc.attnout.data() + static_cast<std::size_t>(i) * H, H, H,
                       proj.data());
            double* xo = bc.xa.data() + static_cast<std::size_t>(i) * H;
            const double* xi = bc.x_in.data() + static_cast<std::size_t>(i) * H;
            for (int h = 0; h < H; ++h) xo[h] = xi[h] + proj[h];
        }
        bc.ln2.assign(wh, 0.0);
        bc.ln2_mean.assign(w, 0.0);
        bc.ln2_rstd.assign(w, 0.0);
        bc.mlp_pre.assign(static_cast<std::size_t>(w) * L.M, 0.0);
        bc.mlp_act.assign(static_cast<std::size_t>(w) * L.M, 0.0);
        x.assign(wh, 0.0);
        std::vector<double> m2(H);
        for (int i = 0; i < w; ++i) {
            ln_fwd(bc.xa.data() + static_cast<std::size_t>(i) * H, P + B.ln2_g,
                   P + B.ln2_b, H, bc.ln2.data() + static_cast<std::size_t>(i) * H,
                   &bc.ln2_mean[i], &bc.ln2_rstd[i]);
            double* pre = bc.mlp_pre.data() + static_cast<std::size_t>(i) * L.M;
            linear_fwd(P + B.w1, P + B.b1,
                       bc.ln2.data() + static_cast<std::size_t>(i) * H, L.M, H, pre);
            double* actv = bc.mlp_act.data() + static_cast<std::size_t>(i) * L.M;
            for (int h = 0; h < L.M; ++h) actv[h] = gelu(pre[h]);
            linear_fwd(P + B.w2, P + B.b2, actv, H, L.M, m2.data());
            double* xo = x.data() + static_cast<std::size_t>(i) * H;
            const double* xa = bc.xa.data() + static_cast<std::size_t>(i) * H;
            for (int h = 0; h < H; ++h) xo[h] = xa[h] + m2[h];
        }
    }

    C.x_final = x;
    C.lnf.assign(static_cast<std::size_t>(w) * H, 0.0);
    C.lnf_mean.assign(w, 0.0);
    C.lnf_rstd.assign(w, 0.0);
    for (int i = 0; i < w; ++i)
        ln_fwd(C.x_final.data() + static_cast<std::size_t>(i) * H, P + L.lnf_g,
               P + L.lnf_b, H, C.lnf.data() + static_cast<std::size_t>(i) * H,
               &C.lnf_mean[i], &C.lnf_rstd[i]);

    C.preds.clear();
    for (int pos : C.state_token_pos) {
        const double* y = C.lnf.data() + static_cast<std::size_t>(pos) * H;
        double p = P[L.head_b];
        for (int h = 0; h < H; ++h) p += P[L.head_w + h] * y[h];
        C.preds.push_back(p);
    }
}

void run_backward(const DtConfig& cfg, const Layout& L, const double* P,
                  const DtWindow& win, const ForwardCache& C,
                  const std::vector<double>& dpreds, double* G) {
    const int H = L.H;
    const int w = C.w;
    const auto wh = static_cast<std::size_t>(w) * H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(H));

    // Head and final layer norm.
    std::vector<double> dlnf(wh, 0.0);
    for (std::size_t si = 0; si < C.state_token_pos.size(); ++si) {
        int pos = C.state_token_pos[si];
        double d = dpreds[si];
        const double* y = C.lnf.data() + static_cast<std::size_t>(pos) * H;
        double* dy = dlnf.data() + static_cast<std::size_t>(pos) * H;
        for (int h = 0; h < H; ++h) {
            G[L.head_w + h] += d * y[h];
            dy[h] += d * P[L.head_w + h];
        }
        G[L.head_b] += d;
    }
    std::vector<double> dx(wh, 0.0);
    for (int i = 0; i < w; ++i)
        ln_bwd(C.x_final.data() + static_cast<std::size_t>(i) * H, P + L.lnf_g, H,
               C.lnf_mean[i], C.lnf_rstd[i],
               dlnf.data() + static_cast<std::size_t>(i) * H,
               dx.data() + static_cast<std::size_t>(i) * H, G + L.lnf_g, G + L.lnf_b);

    std::vector<double> dxa(wh), dln2(wh), dpre(static_cast<std::size_t>(w) * L.M),
        dact(static_cast<std::size_t>(w) * L.M), dln1(wh), dq(wh), dk(wh), dv(wh),
        dattnout(wh), dx_in(wh);
    for (std::size_t bi = L.blocks.size(); bi-- > 0;) {
        const Block& B = L.blocks[bi];
        const BlockCache& bc = C.blocks[bi];
        std::fill(dxa.begin(), dxa.end(), 0.0);
        std::fill(dln2.begin(), dln2.end(), 0.0);
        std::fill(dact.begin(), dact.end(), 0.0);
        std::fill(dpre.begin(), dpre.end(), 0.0);
        // x_out = xa + W2 gelu(W1 ln2(xa) + b1) + b2
        for (int i = 0; i < w; ++i) {
            const double* dxo = dx.data() + static_cast<std::size_t>(i) * H;
            double* dxa_i = dxa.data() + static_cast<std::size_t>(i) * H;
            for (int h = 0; h < H; ++h) dxa_i[h] += dxo[h];
            linear_bwd(P + B.w2, bc.mlp_act.data() + static_cast<std::size_t>(i) * L.M,
                       dxo, H, L.M, G + B.w2, G + B.b2,
                       dact.data() + static_cast<std::size_t>(i) * L.M);
            const double* pre = bc.mlp_pre.data() + static_cast<std::size_t>(i) * L.M;
            double* dpre_i = dpre.data() + static_cast<std::size_t>(i) * L.M;
            const double* dact_i = dact.data() + static_cast<std::size_t>(i) * L.M;
            for (int h = 0; h < L.M; ++h) dpre_i[h] = dact_i[h] * gelu_grad(pre[h]);
            linear_bwd(P + B.w1, bc.ln2.data() + static_cast<std::size_t>(i) * H, dpre_i,
                       L.M, H, G + B.w1, G + B.b1,
                       dln2.data() + static_cast<std::size_t>(i) * H);
            ln_bwd(bc.xa.data() + static_cast<std::size_t>(i) * H, P + B.ln2_g, H,
                   bc.ln2_mean[i], bc.ln2_rstd[i],
                   dln2.data() + static_cast<std::size_t>(i) * H, dxa_i, G + B.ln2_g,
                   G + B.ln2_b);
        }
        // xa = x_in + Wo attnout + bo
        std::fill(dattnout.begin(), dattnout.end(), 0.0);
        std::fill(dx_in.begin(), dx_in.end(), 0.0);
        for (int i = 0; i < w; ++i) {
            const double* dxa_i = dxa.data() + static_cast<std::size_t>(i) * H;
            double* dxi = dx_in.data() + static_cast<std::size_t>(i) * H;
            for (int h = 0; h < H; ++h) dxi[h] += dxa_i[h];
            linear_bwd(P + B.wo, bc.attnout.data() + static_cast<std::size_t>(i) * H,
                       dxa_i, H, H, G + B.wo, G + B.bo,
                       dattnout.data() + static_cast<std::size_t>(i) * H);
        }
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        std::vector<double> datt(w), dscore(w);
        for (int o = 0; o < w; ++o) {
            const double* arow = bc.att.data() + static_cast<std::size_t>(o) * w;
            const double* dz = dattnout.data() + static_cast<std::size_t>(o) * H;
            double dot = 0.0;
            for (int j = 0; j <= o; ++j) {
                const double* vj = bc.v.data() + static_cast<std::size_t>(j) * H;
                double s = 0.0;
                for (int h = 0; h < H; ++h) s += dz[h] * vj[h];
                datt[j] = s;
                dot += arow[j] * s;
                double* dvj = dv.data() + static_cast<std::size_t>(j) * H;
                for (int h = 0; h < H; ++h) dvj[h] += arow[j] * dz[h];
            }
            const double* qo = bc.q.data() + static_cast<std::size_t>(o) * H;
            double* dqo = dq.data() + static_cast<std::size_t>(o) * H;
            for (int j = 0; j <= o; ++j) {
                dscore[j] = arow[j] * (datt[j] - dot) * scale;
                const double* kj = bc.k.data() + static_cast<std::size_t>(j) * H;
                double* dkj = dk.data() + static_cast<std::size_t>(j) * H;
                for (int h = 0; h < H; ++h) {
                    dqo[h] += dscore[j] * kj[h];
                    dkj[h] += dscore[j] * qo[h];
                }
            }
        }
        std::fill(dln1.begin(), dln1.end(), 0.0);
        for (int i = 0; i < w; ++i) {
            const double* xin = bc.ln1.data() + static_cast<std::size_t>(i) * H;
            double* dl = dln1.data() + static_cast<std::size_t>(i) * H;
            linear_bwd(P + B.wq, xin, dq.data() + static_cast<std::size_t>(i) * H, H, H,
                       G + B.wq, G + B.bq, dl);
            linear_bwd(P + B.wk, xin, dk.data() + static_cast<std::size_t>(i) * H, H, H,
                       G + B.wk, G + B.bk, dl);
            linear_bwd(P + B.wv, xin, dv.data() + static_cast<std::size_t>(i) * H, H, H,
                       G + B.wv, G + B.bv, dl);
            ln_bwd(bc.x_in.data() + static_cast<std::size_t>(i) * H, P + B.ln1_g, H,
                   bc.ln1_mean[i], bc.ln1_rstd[i], dl,
                   dx_in.data() + static_cast<std::size_t>(i) * H, G + B.ln1_g,
                   G + B.ln1_b);
        }
        dx = dx_in;
    }

    // Input layer norm and embeddings.
    std::vector<double> demb(wh, 0.0);
    for (int i = 0; i < w; ++i)
        ln_bwd(C.embedded.data() + static_cast<std::size_t>(i) * H, P + L.ln_in_g, H,
               C.ln_in_mean[i], C.ln_in_rstd[i],
               dx.data() + static_cast<std::size_t>(i) * H,
               demb.data() + static_cast<std::size_t>(i) * H, G + L.ln_in_g,
               G + L.ln_in_b);

    for (int i = 0; i < w; ++i) {
        int t = i / 3;
        int kind = i % 3;
        const double* de = demb.data() + static_cast<std::size_t>(i) * H;
        double* dpos = G + L.pos + static_cast<std::size_t>(C.token_timestep[i]) * H;
        for (int h = 0; h < H; ++h) dpos[h] += de[h];
        if (kind == 0) {
            for (int h = 0; h < H; ++h) {
                G[L.embed_r_w + h] += de[h] * win.rtg[t];
                G[L.embed_r_b + h] += de[h];
            }
        } else if (kind == 1) {
            double scaled[8];
            for (int d = 0; d < L.S; ++d)
                scaled[d] = win.states[t][d] / cfg.state_scale[d];
            for (int h = 0; h < H; ++h) {
                double* row = G + L.embed_s_w + static_cast<std::size_t>(h) * L.S;
                for (int d = 0; d < L.S; ++d) row[d] += de[h] * scaled[d];
                G[L.embed_s_b + h] += de[h];
            }
        } else {
            for (int h = 0; h < H; ++h) {
                G[L.embed_a_w + h] += de[h] * win.actions[t];
                G[L.embed_a_b + h] += de[h];
            }
        }
    }
}

}  // namespace

DtModel::DtModel(const DtConfig& cfg, std::uint64_t param_seed) : cfg_(cfg) {
    if (cfg.context_len < 1 || cfg.embed_dim < 1 || cfg.layers < 0 ||
        cfg.max_timesteps < 1 || cfg.state_dim < 1 || cfg.state_dim > 8)
        throw std::invalid_argument("DtModel: bad configuration");
    Layout L(cfg_);
    params_.assign(L.total, 0.0);
    std::mt19937_64 rng(param_seed);
    std::normal_distribution<double> init(0.0, 0.02);
    for (double& p : params_) p = init(rng);
    // Layer-norm gains start at one, biases at zero.
    auto set_ln = [&](int g, int b) {
        for (int h = 0; h < L.H; ++h) {
            params_[g + h] = 1.0;
            params_[b + h] = 0.0;
        }
    };
    set_ln(L.ln_in_g, L.ln_in_b);
    for (const auto& b : L.blocks) {
        set_ln(b.ln1_g, b.ln1_b);
        set_ln(b.ln2_g, b.ln2_b);
        for (int h = 0; h < L.H; ++h)
            params_[b.bq + h] = params_[b.bk + h] = params_[b.bv + h] =
                params_[b.bo + h] = 0.0;
        for (int h = 0; h < L.M; ++h) params_[b.b1 + h] = 0.0;
        for (int h = 0; h < L.H; ++h) params_[b.b2 + h] = 0.0;
    }
    set_ln(L.lnf_g, L.lnf_b);
    params_[L.head_b] = 0.0;
}

std::vector<double> DtModel::forward(const DtWindow& window) const {
    Layout L(cfg_);
    ForwardCache C;
    run_forward(cfg_, L, params_.data(), window, C);
    return C.preds;
}

double DtModel::loss_and_grad(const DtWindow& window, std::vector<double>& grad) const {
    if (window.actions.size() != window.states.size())
        throw std::invalid_argument("loss_and_grad: window must include every action");
    Layout L(cfg_);
    if (grad.size() != params_.size())
        throw std::invalid_argument("loss_and_grad: gradient buffer size mismatch");
    ForwardCache C;
    run_forward(cfg_, L, params_.data(), window, C);
    const int T = static_cast<int>(C.preds.size());
    double loss = 0.0;
    std::vector<double> dpreds(T);
    for (int t = 0; t < T; ++t) {
        double err = C.preds[t] - window.actions[t];
        loss += err * err / T;
        dpreds[t] = 2.0 * err / T;
    }
    run_backward(cfg_, L, params_.data(), window, C, dpreds, grad.data());
    return loss;
}

int DtModel::act(const DtWindow& window) const {
    auto preds = forward(window);
    if (preds.empty()) throw std::invalid_argument("act: empty context");
    int a = static_cast<int>(std::lround(preds.back()));
    return std::clamp(a, 1, cfg_.action_max);
}

std::string DtModel::to_json() const {
    json doc = {{"format", "madda-dt-v1"},
                {"config",
                 {{"context_len", cfg_.context_len},
                  {"embed_dim", cfg_.embed_dim},
                  {"layers", cfg_.layers},
                  {"max_timesteps", cfg_.max_timesteps},
                  {"action_max", cfg_.action_max},
                  {"state_dim", cfg_.state_dim},
                  {"reward_norm", cfg_.reward_norm},
                  {"state_scale", cfg_.state_scale}}},
                {"params", params_}};
    return doc.dump();
}

DtModel DtModel::from_json(const std::string& text) {
    json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "madda-dt-v1")
        throw std::runtime_error("DtModel: unknown checkpoint format");
    const auto& c = doc.at("config");
    DtConfig cfg;
    cfg.context_len = c.at("context_len").get<int>();
    cfg.embed_dim = c.at("embed_dim").get<int>();
    cfg.layers = c.at("layers").get<int>();
    cfg.max_timesteps = c.at("max_timesteps").get<int>();
    cfg.action_max = c.at("action_max").get<int>();
    cfg.state_dim = c.at("state_dim").get<int>();
    cfg.reward_norm = c.at("reward_norm").get<double>();
    cfg.state_scale = c.at("state_scale").get<std::array<double, 6>>();
    DtModel model(cfg, 0);
    auto params = doc.at("params").get<std::vector<double>>();
    if (params.size() != model.params_.size())
        throw std::runtime_error("DtModel: parameter count mismatch");
    model.params_ = std::move(params);
    return model;
}

void DtModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_json() << '\n';
}

DtModel DtModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

DtModel dt_train(const std::vector<Trajectory>& data, const TrainConfig& tc,
                 TrainReport* report) {
    if (data.empty()) throw std::invalid_argument("dt_train: empty dataset");
    if (tc.context_len < 1) throw std::invalid_argument("dt_train: context_len < 1");

    std::size_t total_steps = 0, max_len = 0;
    double max_return = 0.0;
    std::array<double, 6> scale{1, 1, 1, 1, 1, 1};
    for (const auto& tr : data) {
        if (tr.states.empty()) throw std::invalid_argument("dt_train: empty trajectory");
        total_steps += tr.states.size();
        max_len = std::max(max_len, tr.states.size());
        max_return = std::max(max_return, std::abs(tr.rtg.front()));
        for (const auto& s : tr.states)
            for (int d = 0; d < 6; ++d) scale[d] = std::max(scale[d], std::abs(s[d]));
    }
    if (static_cast<std::size_t>(tc.context_len) > max_len)
        throw std::invalid_argument("dt_train: context exceeds every trajectory length");

    DtConfig cfg;
    cfg.context_len = tc.context_len;
    cfg.embed_dim = tc.embed_dim;
    cfg.layers = tc.layers;
    cfg.max_timesteps = static_cast<int>(max_len) + 1;
    cfg.action_max = tc.action_max;
    cfg.reward_norm = std::max(max_return, 1e-9);
    cfg.state_scale = scale;

    DtModel model(cfg, tc.seed);
    auto& P = model.params();
    std::vector<double> grad(P.size(), 0.0);
    std::vector<double> m(P.size(), 0.0), v(P.size(), 0.0);
    std::mt19937_64 rng(mix_seed(tc.seed, 0x747261696eULL));
    std::uniform_int_distribution<std::size_t> pick_traj(0, data.size() - 1);

    int steps = tc.steps_per_epoch > 0
                    ? tc.steps_per_epoch
                    : std::max<int>(1, static_cast<int>(total_steps /
                                                        (static_cast<std::size_t>(
                                                             tc.batch) *
                                                         tc.context_len)));
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long adam_t = 0;
    if (report) report->epoch_losses.clear();

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int s = 0; s < steps; ++s) {
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (int bi = 0; bi < tc.batch; ++bi) {
                const auto& tr = data[pick_traj(rng)];
                const int len = static_cast<int>(tr.states.size());
                int end = std::uniform_int_distribution<int>(1, len)(rng);
                int start = std::max(0, end - tc.context_len);
                DtWindow win;
                for (int t = start; t < end; ++t) {
                    win.rtg.push_back(tr.rtg[t] / cfg.reward_norm);
                    win.states.push_back(tr.states[t]);
                    win.actions.push_back(static_cast<double>(tr.actions[t]));
                    win.timesteps.push_back(t + 1);
                }
                batch_loss += model.loss_and_grad(win, grad);
            }
            batch_loss /= tc.batch;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("dt_train: non-finite loss");
            epoch_loss += batch_loss;
            adam_t += 1;
            double c1 = 1.0 - std::pow(b1, adam_t);
            double c2 = 1.0 - std::pow(b2, adam_t);
            for (std::size_t i = 0; i < P.size(); ++i) {
                double g = grad[i] / tc.batch;
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                P[i] -= tc.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }
        if (report) report->epoch_losses.push_back(epoch_loss / steps);
    }
    return model;
}

DtPolicy::DtPolicy(const DtModel& model, double target_return)
    : model_(&model), target_return_(target_return) {}

void DtPolicy::begin_episode(const EnvState& initial) {
    rtg_ = {target_return_};
    states_ = {initial};
    actions_.clear();
    timesteps_ = {1};
}

int DtPolicy::act(const EnvState& state, std::mt19937_64&) {
    if (states_.empty()) begin_episode(state);
    DtWindow win;
    win.rtg = rtg_;
    win.states = states_;
    win.actions = actions_;
    win.timesteps = timesteps_;
    return model_->act(win);
}

void DtPolicy::on_transition(int action, double reward, const EnvState& next) {
    actions_.push_back(static_cast<double>(action));
    rtg_.push_back(rtg_.back() - reward / model_->config().reward_norm);
    states_.push_back(next);
    timesteps_.push_back(timesteps_.back() + 1);
    const std::size_t K = static_cast<std::size_t>(model_->config().context_len);
    if (rtg_.size() > K) {
        std::size_t drop = rtg_.size() - K;
        rtg_.erase(rtg_.begin(), rtg_.begin() + drop);
        states_.erase(states_.begin(), states_.begin() + drop);
        timesteps_.erase(timesteps_.begin(), timesteps_.begin() + drop);
        actions_.erase(actions_.begin(), actions_.begin() + (actions_.size() - (K - 1)));
    }
}

}  // namespace madda
