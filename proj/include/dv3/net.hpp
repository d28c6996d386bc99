#pragma once

// Multi-stream point-set classifier: a hierarchical set-abstraction encoder
// per stream (one motion stream, t2 weight-shared appearance streams), late
// concatenation fusion, softmax cross-entropy, reverse-mode gradients and an
// Adam training loop. Templated on the scalar type: float for training,
// double for finite-difference gradient checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dv3/common.hpp"
#include "dv3/geom.hpp"
#include "dv3/pointset.hpp"

namespace dv3::net {

// ---------------------------------------------------------------------------
// Parameters

template <typename Real>
struct Tensor {
    std::vector<int> dims;
    std::vector<Real> v;

    static Tensor zeros(std::vector<int> d) {
        Tensor t;
        t.dims = std::move(d);
        std::size_t n = 1;
        for (int x : t.dims) n *= static_cast<std::size_t>(x);
        t.v.assign(n, Real(0));
        return t;
    }
};

template <typename Real>
struct Affine {
    Tensor<Real> w;  // [out, in]
    Tensor<Real> b;  // [out]

    int in() const { return w.dims[1]; }
    int out() const { return w.dims[0]; }
};

template <typename Real>
struct Mlp {
    std::vector<Affine<Real>> layers;
};

struct SetAbstractionSpec {
    GroupSpec group;
    std::vector<int> mlp_widths;
};

struct EncoderSpec {
    SetAbstractionSpec sa1, sa2;
    std::vector<int> global_widths;

    int embedding_width() const { return global_widths.back(); }
};

struct ModelSpec {
    bool has_motion = true;
    int t2 = 3;               // appearance stream count (0 = none)
    int motion_channels = 5;  // T1 + 1
    int n_sample = 2048;      // points sampled per stream
    int classes = 8;
    EncoderSpec encoder;
    std::vector<int> head_widths;  // hidden widths; class logits appended
    double head_dropout = 0.4;

    int streams() const { return (has_motion ? 1 : 0) + t2; }
    int head_input_width() const { return streams() * encoder.embedding_width(); }
};

inline ModelSpec full_model_spec(int classes, int motion_channels, int t2 = 3) {
    ModelSpec s;
    s.classes = classes;
    s.motion_channels = motion_channels;
    s.t2 = t2;
    s.n_sample = 2048;
    s.encoder.sa1 = {{512, 0.1, 32}, {64, 64, 128}};
    s.encoder.sa2 = {{128, 0.2, 64}, {128, 128, 256}};
    s.encoder.global_widths = {256, 512, 1024};
    s.head_widths = {512, 256};
    return s;
}

// Full configuration with all widths and counts divided by 4.
inline ModelSpec desk_model_spec(int classes, int motion_channels, int t2 = 3) {
    ModelSpec s;
    s.classes = classes;
    s.motion_channels = motion_channels;
    s.t2 = t2;
    s.n_sample = 512;
    s.encoder.sa1 = {{128, 0.1, 8}, {16, 16, 32}};
    s.encoder.sa2 = {{32, 0.2, 16}, {32, 32, 64}};
    s.encoder.global_widths = {64, 128, 256};
    s.head_widths = {128, 64};
    return s;
}

// Small enough for finite-difference gradient checking.
inline ModelSpec tiny_model_spec(int classes = 2, int motion_channels = 2, int t2 = 1) {
    ModelSpec s;
    s.classes = classes;
    s.motion_channels = motion_channels;
    s.t2 = t2;
    s.n_sample = 16;
    s.encoder.sa1 = {{4, 0.3, 4}, {8, 8}};
    s.encoder.sa2 = {{2, 0.6, 2}, {8, 8}};
    s.encoder.global_widths = {8, 8};
    s.head_widths = {8};
    s.head_dropout = 0.0;
    return s;
}

template <typename Real>
struct EncoderParams {
    Mlp<Real> sa1, sa2, global;
};

template <typename Real>
struct MultiStreamModel {
    ModelSpec spec;
    EncoderParams<Real> motion;      // used iff spec.has_motion
    EncoderParams<Real> appearance;  // shared by all t2 appearance streams
    Mlp<Real> head;
};

namespace detail {

template <typename Real>
Mlp<Real> make_mlp(int in_width, std::span<const int> widths) {
    Mlp<Real> mlp;
    int in = in_width;
    for (int out : widths) {
        Affine<Real> a;
        a.w = Tensor<Real>::zeros({out, in});
        a.b = Tensor<Real>::zeros({out});
        mlp.layers.push_back(std::move(a));
        in = out;
    }
    return mlp;
}

template <typename Real>
EncoderParams<Real> make_encoder(const EncoderSpec& spec, int in_channels) {
    EncoderParams<Real> e;
    e.sa1 = make_mlp<Real>(3 + in_channels, spec.sa1.mlp_widths);
    e.sa2 = make_mlp<Real>(3 + spec.sa1.mlp_widths.back(), spec.sa2.mlp_widths);
    e.global = make_mlp<Real>(3 + spec.sa2.mlp_widths.back(), spec.global_widths);
    return e;
}

// He-normal weights; biases drawn uniform within 1/sqrt(fan_in). Nonzero
// biases keep exactly-zero grouped rows (appearance streams have no feature
// channels) off the ReLU kink, where finite differences and the subgradient
// legitimately disagree.
template <typename Real>
void init_affine(Affine<Real>& a, Rng& rng) {
    const double stddev = std::sqrt(2.0 / a.in());
    for (auto& x : a.w.v) x = static_cast<Real>(rng.normal() * stddev);
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.in()));
    for (auto& x : a.b.v) x = static_cast<Real>(rng.uniform(-bound, bound));
}

}  // namespace detail

template <typename Real>
struct NamedTensor {
    std::string name;
    Tensor<Real>* tensor;
};

template <typename Real>
std::vector<NamedTensor<Real>> collect_params(MultiStreamModel<Real>& model) {
    std::vector<NamedTensor<Real>> out;
    auto add_mlp = [&](const std::string& prefix, Mlp<Real>& mlp) {
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            out.push_back({prefix + "/" + std::to_string(l) + "/w", &mlp.layers[l].w});
            out.push_back({prefix + "/" + std::to_string(l) + "/b", &mlp.layers[l].b});
        }
    };
    auto add_encoder = [&](const std::string& prefix, EncoderParams<Real>& e) {
        add_mlp(prefix + "/sa1", e.sa1);
        add_mlp(prefix + "/sa2", e.sa2);
        add_mlp(prefix + "/global", e.global);
    };
    if (model.spec.has_motion) add_encoder("motion", model.motion);
    if (model.spec.t2 > 0) add_encoder("appearance", model.appearance);
    add_mlp("head", model.head);
    return out;
}

template <typename Real>
MultiStreamModel<Real> init_model(const ModelSpec& spec, std::uint64_t seed) {
    if (spec.streams() < 1) throw Error("model needs at least one stream");
    MultiStreamModel<Real> m;
    m.spec = spec;
    if (spec.has_motion) m.motion = detail::make_encoder<Real>(spec.encoder, spec.motion_channels);
    if (spec.t2 > 0) m.appearance = detail::make_encoder<Real>(spec.encoder, 0);
    std::vector<int> head_widths = spec.head_widths;
    head_widths.push_back(spec.classes);
    m.head = detail::make_mlp<Real>(spec.head_input_width(), head_widths);

    std::vector<Mlp<Real>*> mlps;
    if (spec.has_motion) mlps.insert(mlps.end(), {&m.motion.sa1, &m.motion.sa2, &m.motion.global});
    if (spec.t2 > 0)
        mlps.insert(mlps.end(), {&m.appearance.sa1, &m.appearance.sa2, &m.appearance.global});
    mlps.push_back(&m.head);
    std::uint64_t tag = 0;
    for (Mlp<Real>* mlp : mlps)
        for (auto& layer : mlp->layers) {
            Rng rng = Rng::derive(seed, 0x6d6f64, tag++);
            detail::init_affine(layer, rng);
        }
    return m;
}

// Same shapes, all values zero (gradient / optimizer-state holder).
template <typename Real>
MultiStreamModel<Real> zeros_like(const MultiStreamModel<Real>& model) {
    MultiStreamModel<Real> z;
    z.spec = model.spec;
    if (model.spec.has_motion)
        z.motion = detail::make_encoder<Real>(model.spec.encoder, model.spec.motion_channels);
    if (model.spec.t2 > 0) z.appearance = detail::make_encoder<Real>(model.spec.encoder, 0);
    std::vector<int> head_widths = model.spec.head_widths;
    head_widths.push_back(model.spec.classes);
    z.head = detail::make_mlp<Real>(model.spec.head_input_width(), head_widths);
    return z;
}

// ---------------------------------------------------------------------------
// Stream inputs

template <typename Real>
struct StreamInput {
    std::vector<Real> xyz;    // 3n
    std::vector<Real> feats;  // n * channels
    int n = 0;
    int channels = 0;
};

template <typename Real>
StreamInput<Real> to_stream_input(const DvPointSet& ps) {
    StreamInput<Real> in;
    in.n = ps.count;
    in.channels = ps.channels;
    in.xyz.assign(ps.xyz.begin(), ps.xyz.end());
    in.feats.assign(ps.motion.begin(), ps.motion.end());
    return in;
}

template <typename Real>
StreamInput<Real> to_stream_input(const AppearancePointSet& ps) {
    StreamInput<Real> in;
    in.n = ps.count;
    in.channels = 0;
    in.xyz.assign(ps.xyz.begin(), ps.xyz.end());
    return in;
}

// ---------------------------------------------------------------------------
// Forward / backward building blocks

template <typename Real>
struct RowsCache {
    std::vector<Real> input;             // n_rows * in_width
    std::vector<std::vector<Real>> act;  // post-ReLU rows per layer
    int n_rows = 0;
};

namespace detail {

template <typename Real>
void mlp_relu_forward(const Mlp<Real>& mlp, std::vector<Real> rows, int n_rows,
                      RowsCache<Real>& cache) {
    cache.input = std::move(rows);
    cache.n_rows = n_rows;
    cache.act.assign(mlp.layers.size(), {});
    const Real* in = cache.input.data();
    int in_w = mlp.layers.empty() ? 0 : mlp.layers[0].in();
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const Affine<Real>& a = mlp.layers[l];
        const int out_w = a.out();
        auto& out = cache.act[l];
        out.assign(static_cast<std::size_t>(n_rows) * out_w, Real(0));
        for (int r = 0; r < n_rows; ++r) {
            const Real* x = in + static_cast<std::size_t>(r) * in_w;
            Real* y = out.data() + static_cast<std::size_t>(r) * out_w;
            for (int o = 0; o < out_w; ++o) {
                const Real* wrow = a.w.v.data() + static_cast<std::size_t>(o) * in_w;
                Real acc = a.b.v[o];
                for (int i = 0; i < in_w; ++i) acc += wrow[i] * x[i];
                y[o] = acc > Real(0) ? acc : Real(0);
            }
        }
        in = out.data();
        in_w = out_w;
    }
}

// grad_out is consumed; returns gradient w.r.t. the input rows via grad_in
// (optional). Parameter gradients accumulate into grad_mlp.
template <typename Real>
void mlp_relu_backward(const Mlp<Real>& mlp, const RowsCache<Real>& cache,
                       std::vector<Real> grad_out, Mlp<Real>& grad_mlp,
                       std::vector<Real>* grad_in) {
    const int n_rows = cache.n_rows;
    for (int l = static_cast<int>(mlp.layers.size()) - 1; l >= 0; --l) {
        const Affine<Real>& a = mlp.layers[l];
        const int in_w = a.in(), out_w = a.out();
        const auto& out_act = cache.act[l];
        const Real* in =
            l == 0 ? cache.input.data() : cache.act[static_cast<std::size_t>(l) - 1].data();

        // ReLU subgradient through the stored post-activation.
        for (std::size_t i = 0; i < grad_out.size(); ++i)
            if (out_act[i] <= Real(0)) grad_out[i] = Real(0);

        std::vector<Real> grad_prev(static_cast<std::size_t>(n_rows) * in_w, Real(0));
        for (int r = 0; r < n_rows; ++r) {
            const Real* x = in + static_cast<std::size_t>(r) * in_w;
            const Real* gy = grad_out.data() + static_cast<std::size_t>(r) * out_w;
            Real* gx = grad_prev.data() + static_cast<std::size_t>(r) * in_w;
            for (int o = 0; o < out_w; ++o) {
                const Real g = gy[o];
                if (g == Real(0)) continue;
                Real* gw = grad_mlp.layers[l].w.v.data() + static_cast<std::size_t>(o) * in_w;
                const Real* wrow = a.w.v.data() + static_cast<std::size_t>(o) * in_w;
                grad_mlp.layers[l].b.v[o] += g;
                for (int i = 0; i < in_w; ++i) {
                    gw[i] += g * x[i];
                    gx[i] += g * wrow[i];
                }
            }
        }
        grad_out = std::move(grad_prev);
    }
    if (grad_in) *grad_in = std::move(grad_out);
}

// Max over K rows per group and channel; winner-takes-gradient.
template <typename Real>
void max_pool_groups(const std::vector<Real>& rows, int groups, int k, int width,
                     std::vector<Real>& pooled, std::vector<int>& winners) {
    pooled.assign(static_cast<std::size_t>(groups) * width, Real(0));
    winners.assign(static_cast<std::size_t>(groups) * width, 0);
    for (int g = 0; g < groups; ++g) {
        for (int c = 0; c < width; ++c) {
            Real best = rows[(static_cast<std::size_t>(g) * k) * width + c];
            int best_row = g * k;
            for (int j = 1; j < k; ++j) {
                Real v = rows[(static_cast<std::size_t>(g) * k + j) * width + c];
                if (v > best) {
                    best = v;
                    best_row = g * k + j;
                }
            }
            pooled[static_cast<std::size_t>(g) * width + c] = best;
            winners[static_cast<std::size_t>(g) * width + c] = best_row;
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Encoder

template <typename Real>
struct SaCache {
    std::vector<int> centroids;  // into level input points
    std::vector<int> members;    // n_centroids * K, -1 = empty-ball slot
    RowsCache<Real> mlp;
    std::vector<int> winners;    // n_centroids * out_width
    std::vector<Real> out_xyz;   // centroid coords
    std::vector<Real> out_feat;  // pooled features
    int n_in = 0, feat_in = 0;
};

template <typename Real>
struct EncoderCache {
    std::vector<Real> xyz;   // sampled points, n_sample * 3
    std::vector<Real> feat;  // n_sample * channels
    int channels = 0;
    SaCache<Real> sa1, sa2;
    RowsCache<Real> global;
    std::vector<int> global_winners;
    std::vector<Real> embedding;
};

namespace detail {

template <typename Real>
void sa_forward(const Mlp<Real>& mlp, const SetAbstractionSpec& spec,
                const std::vector<Real>& xyz, const std::vector<Real>& feat, int n, int feat_dim,
                SaCache<Real>& cache) {
    cache.n_in = n;
    cache.feat_in = feat_dim;
    cache.centroids = geom::farthest_point_sample<Real>(
        std::span<const Real>(xyz), std::min(spec.group.n_centroids, n), 0);
    cache.members = geom::group_indices<Real>(std::span<const Real>(xyz), cache.centroids,
                                              spec.group);
    auto rows = geom::group_rows<Real>(std::span<const Real>(xyz), std::span<const Real>(feat),
                                       feat_dim, cache.centroids, cache.members,
                                       spec.group.max_neighbors);
    const int groups = static_cast<int>(cache.centroids.size());
    mlp_relu_forward(mlp, std::move(rows), groups * spec.group.max_neighbors, cache.mlp);
    const int out_w = mlp.layers.back().out();
    max_pool_groups(cache.mlp.act.back(), groups, spec.group.max_neighbors, out_w,
                    cache.out_feat, cache.winners);
    cache.out_xyz.resize(static_cast<std::size_t>(groups) * 3);
    for (int c = 0; c < groups; ++c)
        for (int a = 0; a < 3; ++a)
            cache.out_xyz[3 * c + a] = xyz[3 * static_cast<std::size_t>(cache.centroids[c]) + a];
}

// Returns gradient w.r.t. the level's input features (n_in * feat_in).
template <typename Real>
std::vector<Real> sa_backward(const Mlp<Real>& mlp, const SetAbstractionSpec& spec,
                              const SaCache<Real>& cache, const std::vector<Real>& grad_out_feat,
                              Mlp<Real>& grad_mlp) {
    const int groups = static_cast<int>(cache.centroids.size());
    const int k = spec.group.max_neighbors;
    const int out_w = mlp.layers.back().out();

    std::vector<Real> grad_rows(static_cast<std::size_t>(groups) * k * out_w, Real(0));
    for (std::size_t i = 0; i < grad_out_feat.size(); ++i) {
        const int c = static_cast<int>(i) % out_w;
        grad_rows[static_cast<std::size_t>(cache.winners[i]) * out_w + c] += grad_out_feat[i];
    }

    std::vector<Real> grad_rows_in;
    mlp_relu_backward(mlp, cache.mlp, std::move(grad_rows), grad_mlp, &grad_rows_in);

    const int row_w = 3 + cache.feat_in;
    std::vector<Real> grad_in_feat(static_cast<std::size_t>(cache.n_in) * cache.feat_in, Real(0));
    if (cache.feat_in > 0) {
        for (int r = 0; r < groups * k; ++r) {
            const int m = cache.members[r];
            if (m < 0) continue;
            const Real* g = grad_rows_in.data() + static_cast<std::size_t>(r) * row_w + 3;
            Real* dst = grad_in_feat.data() + static_cast<std::size_t>(m) * cache.feat_in;
            for (int f = 0; f < cache.feat_in; ++f) dst[f] += g[f];
        }
    }
    return grad_in_feat;
}

}  // namespace detail

// FPS-samples (or repetition-pads) to n_sample points, runs both set
// abstraction levels and the global max-pool MLP. fps_start seeds the
// deterministic farthest point sampling.
template <typename Real>
std::vector<Real> encode_stream(const EncoderParams<Real>& params, const EncoderSpec& spec,
                                const StreamInput<Real>& input, int n_sample, int fps_start,
                                EncoderCache<Real>& cache) {
    if (input.n == 0) throw Error("encode_stream: empty point set");
    if (n_sample < spec.sa1.group.n_centroids)
        throw Error("encode_stream: n_sample below first-level centroid count");

    std::vector<int> idx;
    idx.reserve(n_sample);
    if (input.n > n_sample) {
        idx = geom::farthest_point_sample<Real>(std::span<const Real>(input.xyz), n_sample,
                                                fps_start % input.n);
    } else {
        // Repetition padding, rotated so the FPS start point leads; the
        // downstream per-level FPS then starts from the same physical point
        // regardless of input ordering.
        for (int i = 0; i < n_sample; ++i) idx.push_back((fps_start + i) % input.n);
    }

    cache.channels = input.channels;
    cache.xyz.resize(static_cast<std::size_t>(n_sample) * 3);
    cache.feat.resize(static_cast<std::size_t>(n_sample) * input.channels);
    for (int i = 0; i < n_sample; ++i) {
        for (int a = 0; a < 3; ++a) cache.xyz[3 * i + a] = input.xyz[3 * idx[i] + a];
        for (int c = 0; c < input.channels; ++c)
            cache.feat[static_cast<std::size_t>(i) * input.channels + c] =
                input.feats[static_cast<std::size_t>(idx[i]) * input.channels + c];
    }

    detail::sa_forward(params.sa1, spec.sa1, cache.xyz, cache.feat, n_sample, input.channels,
                       cache.sa1);
    detail::sa_forward(params.sa2, spec.sa2, cache.sa1.out_xyz, cache.sa1.out_feat,
                       static_cast<int>(cache.sa1.centroids.size()),
                       static_cast<int>(spec.sa1.mlp_widths.back()), cache.sa2);

    // Group-all stage: every remaining point in one group.
    const int n2 = static_cast<int>(cache.sa2.centroids.size());
    const int f2 = spec.sa2.mlp_widths.back();
    std::vector<Real> rows(static_cast<std::size_t>(n2) * (3 + f2));
    for (int i = 0; i < n2; ++i) {
        for (int a = 0; a < 3; ++a) rows[static_cast<std::size_t>(i) * (3 + f2) + a] =
            cache.sa2.out_xyz[3 * i + a];
        for (int f = 0; f < f2; ++f)
            rows[static_cast<std::size_t>(i) * (3 + f2) + 3 + f] =
                cache.sa2.out_feat[static_cast<std::size_t>(i) * f2 + f];
    }
    detail::mlp_relu_forward(params.global, std::move(rows), n2, cache.global);
    const int emb_w = spec.embedding_width();
    detail::max_pool_groups(cache.global.act.back(), 1, n2, emb_w, cache.embedding,
                            cache.global_winners);
    return cache.embedding;
}

template <typename Real>
void encode_backward(const EncoderParams<Real>& params, const EncoderSpec& spec,
                     const EncoderCache<Real>& cache, const std::vector<Real>& grad_embedding,
                     EncoderParams<Real>& grads) {
    const int n2 = static_cast<int>(cache.sa2.centroids.size());
    const int emb_w = spec.embedding_width();

    std::vector<Real> grad_grows(static_cast<std::size_t>(n2) * emb_w, Real(0));
    for (int c = 0; c < emb_w; ++c)
        grad_grows[static_cast<std::size_t>(cache.global_winners[c]) * emb_w + c] +=
            grad_embedding[c];

    std::vector<Real> grad_grows_in;
    detail::mlp_relu_backward(params.global, cache.global, std::move(grad_grows), grads.global,
                              &grad_grows_in);

    const int f2 = spec.sa2.mlp_widths.back();
    std::vector<Real> grad_f2(static_cast<std::size_t>(n2) * f2);
    for (int i = 0; i < n2; ++i)
        for (int f = 0; f < f2; ++f)
            grad_f2[static_cast<std::size_t>(i) * f2 + f] =
                grad_grows_in[static_cast<std::size_t>(i) * (3 + f2) + 3 + f];

    auto grad_f1 = detail::sa_backward(params.sa2, spec.sa2, cache.sa2, grad_f2, grads.sa2);
    detail::sa_backward(params.sa1, spec.sa1, cache.sa1, grad_f1, grads.sa1);
}

// ---------------------------------------------------------------------------
// Head, loss, full-sample passes

template <typename Real>
struct HeadCache {
    std::vector<Real> input;
    std::vector<std::vector<Real>> act;   // hidden activations (post ReLU+dropout)
    std::vector<std::vector<Real>> mask;  // dropout multipliers per hidden layer
    std::vector<Real> logits;
};

namespace detail {

template <typename Real>
void head_forward(const Mlp<Real>& head, std::vector<Real> x, double dropout, bool training,
                  Rng* rng, HeadCache<Real>& cache) {
    cache.input = std::move(x);
    const std::size_t hidden = head.layers.size() - 1;
    cache.act.assign(hidden, {});
    cache.mask.assign(hidden, {});
    const Real* in = cache.input.data();
    for (std::size_t l = 0; l < head.layers.size(); ++l) {
        const Affine<Real>& a = head.layers[l];
        const int in_w = a.in(), out_w = a.out();
        std::vector<Real> y(out_w);
        for (int o = 0; o < out_w; ++o) {
            const Real* wrow = a.w.v.data() + static_cast<std::size_t>(o) * in_w;
            Real acc = a.b.v[o];
            for (int i = 0; i < in_w; ++i) acc += wrow[i] * in[i];
            y[o] = acc;
        }
        if (l + 1 == head.layers.size()) {
            cache.logits = std::move(y);
            break;
        }
        for (auto& v : y) v = v > Real(0) ? v : Real(0);
        cache.mask[l].assign(out_w, Real(1));
        if (training && dropout > 0.0) {
            const Real keep = static_cast<Real>(1.0 - dropout);
            for (int o = 0; o < out_w; ++o) {
                const bool kept = rng->uniform() >= dropout;
                cache.mask[l][o] = kept ? Real(1) / keep : Real(0);
                y[o] *= cache.mask[l][o];
            }
        }
        cache.act[l] = std::move(y);
        in = cache.act[l].data();
    }
}

template <typename Real>
void head_backward(const Mlp<Real>& head, const HeadCache<Real>& cache,
                   std::vector<Real> grad_logits, Mlp<Real>& grad_head,
                   std::vector<Real>& grad_input) {
    std::vector<Real> g = std::move(grad_logits);
    for (int l = static_cast<int>(head.layers.size()) - 1; l >= 0; --l) {
        const Affine<Real>& a = head.layers[l];
        const int in_w = a.in(), out_w = a.out();
        const bool is_hidden = l + 1 < static_cast<int>(head.layers.size());
        if (is_hidden) {
            for (int o = 0; o < out_w; ++o) {
                g[o] *= cache.mask[l][o];
                if (cache.act[l][o] == Real(0) && cache.mask[l][o] != Real(0)) g[o] = Real(0);
                // act==0 with nonzero mask means the ReLU clipped; kill grad.
            }
        }
        const Real* x = l == 0 ? cache.input.data() : cache.act[static_cast<std::size_t>(l) - 1].data();
        std::vector<Real> gx(in_w, Real(0));
        for (int o = 0; o < out_w; ++o) {
            const Real go = g[o];
            if (go == Real(0)) continue;
            grad_head.layers[l].b.v[o] += go;
            Real* gw = grad_head.layers[l].w.v.data() + static_cast<std::size_t>(o) * in_w;
            const Real* wrow = a.w.v.data() + static_cast<std::size_t>(o) * in_w;
            for (int i = 0; i < in_w; ++i) {
                gw[i] += go * x[i];
                gx[i] += go * wrow[i];
            }
        }
        g = std::move(gx);
    }
    grad_input = std::move(g);
}

}  // namespace detail

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
    Real mx = logits[0];
    for (Real v : logits) mx = std::max(mx, v);
    std::vector<Real> p(logits.size());
    Real sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Returns (loss, grad_logits) for one sample; grad of loss w.r.t. logits is
// softmax - one_hot.
template <typename Real>
std::pair<Real, std::vector<Real>> cross_entropy(std::span<const Real> logits, int label) {
    auto p = softmax(logits);
    const Real eps = static_cast<Real>(1e-12);
    Real loss = -std::log(std::max(p[static_cast<std::size_t>(label)], eps));
    p[static_cast<std::size_t>(label)] -= Real(1);
    return {loss, std::move(p)};
}

struct Sample {
    DvPointSet motion;  // normalized; may be empty (zero-motion videos)
    std::vector<AppearancePointSet> appearance;
    int label = 0;
};

template <typename Real>
struct SampleCache {
    EncoderCache<Real> motion;
    bool motion_empty = false;
    std::vector<EncoderCache<Real>> appearance;
    HeadCache<Real> head;
};

// Logits for one sample. An empty motion point set contributes a zero
// embedding (zero-motion videos stay classifiable); appearance sets must be
// non-empty and exactly t2 of them.
template <typename Real>
std::vector<Real> forward_sample(const MultiStreamModel<Real>& model, const Sample& sample,
                                 bool training, Rng* dropout_rng, SampleCache<Real>& cache) {
    const ModelSpec& spec = model.spec;
    if (static_cast<int>(sample.appearance.size()) != spec.t2)
        throw Error("stream count mismatch: expected " + std::to_string(spec.t2) +
                    " appearance sets, got " + std::to_string(sample.appearance.size()));
    if (spec.has_motion && sample.motion.count > 0 &&
        sample.motion.channels != spec.motion_channels)
        throw Error("motion channel mismatch: expected " + std::to_string(spec.motion_channels) +
                    ", got " + std::to_string(sample.motion.channels));

    const int emb_w = spec.encoder.embedding_width();
    std::vector<Real> concat;
    concat.reserve(static_cast<std::size_t>(spec.streams()) * emb_w);

    if (spec.has_motion) {
        cache.motion_empty = sample.motion.empty();
        if (cache.motion_empty) {
            concat.insert(concat.end(), emb_w, Real(0));
        } else {
            auto in = to_stream_input<Real>(sample.motion);
            auto emb = encode_stream(model.motion, spec.encoder, in, spec.n_sample, 0,
                                     cache.motion);
            concat.insert(concat.end(), emb.begin(), emb.end());
        }
    }
    cache.appearance.assign(static_cast<std::size_t>(spec.t2), {});
    for (int s = 0; s < spec.t2; ++s) {
        auto in = to_stream_input<Real>(sample.appearance[s]);
        auto emb = encode_stream(model.appearance, spec.encoder, in, spec.n_sample, 0,
                                 cache.appearance[s]);
        concat.insert(concat.end(), emb.begin(), emb.end());
    }

    detail::head_forward(model.head, std::move(concat), spec.head_dropout, training, dropout_rng,
                         cache.head);
    return cache.head.logits;
}

template <typename Real>
void backward_sample(const MultiStreamModel<Real>& model, const SampleCache<Real>& cache,
                     std::vector<Real> grad_logits, MultiStreamModel<Real>& grads) {
    const ModelSpec& spec = model.spec;
    const int emb_w = spec.encoder.embedding_width();

    std::vector<Real> grad_concat;
    detail::head_backward(model.head, cache.head, std::move(grad_logits), grads.head,
                          grad_concat);

    std::size_t off = 0;
    if (spec.has_motion) {
        if (!cache.motion_empty) {
            std::vector<Real> g(grad_concat.begin() + off, grad_concat.begin() + off + emb_w);
            encode_backward(model.motion, spec.encoder, cache.motion, g, grads.motion);
        }
        off += emb_w;
    }
    for (int s = 0; s < spec.t2; ++s) {
        std::vector<Real> g(grad_concat.begin() + off, grad_concat.begin() + off + emb_w);
        encode_backward(model.appearance, spec.encoder, cache.appearance[s], g,
                        grads.appearance);
        off += emb_w;
    }
}

// Convenience eval-mode forward: logits and softmax probabilities.
template <typename Real>
std::pair<std::vector<Real>, std::vector<Real>> forward(const MultiStreamModel<Real>& model,
                                                        const Sample& sample) {
    SampleCache<Real> cache;
    auto logits = forward_sample(model, sample, false, nullptr, cache);
    auto probs = softmax(std::span<const Real>(logits));
    return {std::move(logits), std::move(probs)};
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentConfig {
    double rot_y_range = 30.0 * 3.14159265358979323846 / 180.0;
    double rot_x_range = 5.0 * 3.14159265358979323846 / 180.0;
    double jitter_sigma = 0.01;
    double jitter_clip = 0.05;
    double dropout_fraction = 0.2;  // fraction of points dropped
};

namespace detail {

inline void augment_coords(std::vector<float>& xyz, int& count, int stride_channels,
                           std::vector<float>* channels, const AugmentConfig& cfg, Rng& rng) {
    const double ry = cfg.rot_y_range > 0 ? rng.uniform(-cfg.rot_y_range, cfg.rot_y_range) : 0.0;
    const double rx = cfg.rot_x_range > 0 ? rng.uniform(-cfg.rot_x_range, cfg.rot_x_range) : 0.0;
    if (ry != 0.0 || rx != 0.0) {
        const float cy = static_cast<float>(std::cos(ry)), sy = static_cast<float>(std::sin(ry));
        const float cx = static_cast<float>(std::cos(rx)), sx = static_cast<float>(std::sin(rx));
        for (int i = 0; i < count; ++i) {
            float x = xyz[3 * i], y = xyz[3 * i + 1], z = xyz[3 * i + 2];
            // around Y, then around X
            float x1 = cy * x + sy * z, z1 = -sy * x + cy * z;
            float y2 = cx * y - sx * z1, z2 = sx * y + cx * z1;
            xyz[3 * i] = x1;
            xyz[3 * i + 1] = y2;
            xyz[3 * i + 2] = z2;
        }
    }
    if (cfg.jitter_sigma > 0) {
        for (auto& v : xyz) {
            double noise = rng.normal() * cfg.jitter_sigma;
            noise = std::clamp(noise, -cfg.jitter_clip, cfg.jitter_clip);
            v += static_cast<float>(noise);
        }
    }
    if (cfg.dropout_fraction > 0 && count > 1) {
        const int n_drop = std::min(
            count - 1, static_cast<int>(std::floor(cfg.dropout_fraction * count + 0.5)));
        if (n_drop > 0) {
            std::vector<int> order(count);
            for (int i = 0; i < count; ++i) order[i] = i;
            rng.shuffle(order);
            std::vector<int> keep(order.begin(), order.begin() + (count - n_drop));
            std::sort(keep.begin(), keep.end());
            std::vector<float> new_xyz(keep.size() * 3);
            std::vector<float> new_ch;
            if (channels) new_ch.resize(keep.size() * static_cast<std::size_t>(stride_channels));
            for (std::size_t i = 0; i < keep.size(); ++i) {
                for (int a = 0; a < 3; ++a) new_xyz[3 * i + a] = xyz[3 * keep[i] + a];
                if (channels)
                    for (int c = 0; c < stride_channels; ++c)
                        new_ch[i * stride_channels + c] =
                            (*channels)[static_cast<std::size_t>(keep[i]) * stride_channels + c];
            }
            xyz = std::move(new_xyz);
            if (channels) *channels = std::move(new_ch);
            count = static_cast<int>(keep.size());
        }
    }
}

}  // namespace detail

// Rotation about Y then X, clipped Gaussian coordinate jitter, random point
// dropout. Motion features are untouched (dropped points take theirs along).
inline DvPointSet augment(const DvPointSet& ps, const AugmentConfig& cfg, Rng& rng) {
    DvPointSet out = ps;
    detail::augment_coords(out.xyz, out.count, out.channels, &out.motion, cfg, rng);
    return out;
}

inline AppearancePointSet augment(const AppearancePointSet& ps, const AugmentConfig& cfg,
                                  Rng& rng) {
    AppearancePointSet out = ps;
    detail::augment_coords(out.xyz, out.count, 0, nullptr, cfg, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    int batch_size = 32;
    double lr = 0.001;
    double lr_decay = 0.5;
    int lr_decay_every = 10;  // epochs
    int epochs = 70;
    std::uint64_t seed = 0;
    AugmentConfig augment;
    bool use_augment = true;
    int threads = 0;  // 0 = hardware concurrency
};

struct EpochMetrics {
    int epoch = 0;
    double loss = 0;
    double accuracy = 0;
};

inline double scheduled_lr(const TrainConfig& cfg, int epoch) {
    return cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

inline std::string format_metrics(const std::vector<EpochMetrics>& metrics) {
    std::string out = "epoch,loss,accuracy\n";
    char buf[96];
    for (const auto& m : metrics) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.4f\n", m.epoch, m.loss, m.accuracy);
        out += buf;
    }
    return out;
}

namespace detail {

template <typename Real>
void adam_step(std::vector<NamedTensor<Real>>& params, std::vector<NamedTensor<Real>>& grads,
               std::vector<NamedTensor<Real>>& m, std::vector<NamedTensor<Real>>& v, long step,
               double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& pv = params[t].tensor->v;
        auto& gv = grads[t].tensor->v;
        auto& mv = m[t].tensor->v;
        auto& vv = v[t].tensor->v;
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double g = gv[i];
            mv[i] = static_cast<Real>(beta1 * mv[i] + (1.0 - beta1) * g);
            vv[i] = static_cast<Real>(beta2 * vv[i] + (1.0 - beta2) * g * g);
            const double mhat = mv[i] / bc1;
            const double vhat = vv[i] / bc2;
            pv[i] -= static_cast<Real>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

template <typename Real>
void accumulate(MultiStreamModel<Real>& into, MultiStreamModel<Real>& from, Real scale) {
    auto a = collect_params(into);
    auto b = collect_params(from);
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].tensor->v.size(); ++i)
            a[t].tensor->v[i] += scale * b[t].tensor->v[i];
}

template <typename Real>
void zero_params(MultiStreamModel<Real>& m) {
    for (auto& p : collect_params(m)) std::fill(p.tensor->v.begin(), p.tensor->v.end(), Real(0));
}

}  // namespace detail

struct EvalResult {
    double accuracy = 0;
    std::vector<int> confusion;  // classes x classes, row = truth
    int total = 0;
};

template <typename Real>
EvalResult evaluate(const MultiStreamModel<Real>& model, std::span<const Sample> samples,
                    int threads = 0) {
    const int classes = model.spec.classes;
    EvalResult r;
    r.confusion.assign(static_cast<std::size_t>(classes) * classes, 0);
    r.total = static_cast<int>(samples.size());
    if (samples.empty()) return r;
    for (const auto& s : samples)
        if (s.label < 0 || s.label >= classes)
            throw Error("class count mismatch: label " + std::to_string(s.label) +
                        " outside checkpoint's " + std::to_string(classes) + " classes");

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, std::max(1, static_cast<int>(samples.size())));

    std::vector<int> predictions(samples.size());
    std::vector<std::future<void>> futs;
    std::size_t chunk = (samples.size() + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(samples.size(), lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, [&, lo, hi] {
            SampleCache<Real> cache;
            for (std::size_t i = lo; i < hi; ++i) {
                auto logits = forward_sample(model, samples[i], false, nullptr, cache);
                predictions[i] = static_cast<int>(
                    std::max_element(logits.begin(), logits.end()) - logits.begin());
            }
        }));
    }
    for (auto& f : futs) f.get();

    int correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (predictions[i] == samples[i].label) ++correct;
        r.confusion[static_cast<std::size_t>(samples[i].label) * classes + predictions[i]]++;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return r;
}

template <typename Real>
struct TrainResult {
    MultiStreamModel<Real> model;
    std::vector<EpochMetrics> metrics;
};

// Adam with step-decayed learning rate. Deterministic for a fixed seed:
// per-sample RNG streams are derived from (seed, epoch, sample index) and
// gradients reduce in sample order regardless of thread count.
template <typename Real>
TrainResult<Real> train(std::span<const Sample> dataset, const ModelSpec& spec,
                        const TrainConfig& cfg) {
    if (dataset.empty()) throw Error("train: empty dataset");
    if (cfg.lr_decay_every < 1 || cfg.batch_size < 1 || cfg.epochs < 1)
        throw Error("train: bad config");
    int max_label = 0;
    for (const auto& s : dataset) max_label = std::max(max_label, s.label);
    if (max_label + 1 > spec.classes) throw Error("train: label exceeds class count");
    if (max_label < 1) throw Error("train: need at least 2 classes");

    TrainResult<Real> result;
    result.model = init_model<Real>(spec, cfg.seed);
    auto& model = result.model;

    auto grads = zeros_like(model);
    auto adam_m = zeros_like(model);
    auto adam_v = zeros_like(model);
    auto p_model = collect_params(model);
    auto p_grads = collect_params(grads);
    auto p_m = collect_params(adam_m);
    auto p_v = collect_params(adam_v);

    const int n = static_cast<int>(dataset.size());
    const int batch = std::min(cfg.batch_size, n);
    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, batch);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    struct Slot {
        MultiStreamModel<Real> grad;
        double loss = 0;
        bool correct = false;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(batch));
    for (auto& s : slots) s.grad = zeros_like(model);

    long adam_steps = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = scheduled_lr(cfg, epoch);
        Rng shuffle_rng = Rng::derive(cfg.seed, 0x73687566, static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0;
        int epoch_correct = 0;

        for (int start = 0; start < n; start += batch) {
            const int b = std::min(batch, n - start);

            auto run_slot = [&](int s) {
                const int sample_idx = order[start + s];
                const Sample& src = dataset[static_cast<std::size_t>(sample_idx)];
                Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch) + 1,
                                      static_cast<std::uint64_t>(sample_idx));
                Sample aug;
                const Sample* input = &src;
                if (cfg.use_augment) {
                    aug.label = src.label;
                    aug.motion = src.motion.empty() ? src.motion
                                                    : augment(src.motion, cfg.augment, rng);
                    aug.appearance.reserve(src.appearance.size());
                    for (const auto& a : src.appearance)
                        aug.appearance.push_back(augment(a, cfg.augment, rng));
                    input = &aug;
                }
                Slot& slot = slots[static_cast<std::size_t>(s)];
                detail::zero_params(slot.grad);
                SampleCache<Real> cache;
                auto logits = forward_sample(model, *input, true, &rng, cache);
                auto [loss, grad_logits] =
                    cross_entropy(std::span<const Real>(logits), input->label);
                slot.loss = static_cast<double>(loss);
                slot.correct = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                                                logits.begin()) == input->label;
                backward_sample(model, cache, std::move(grad_logits), slot.grad);
            };

            if (n_threads <= 1 || b == 1) {
                for (int s = 0; s < b; ++s) run_slot(s);
            } else {
                std::vector<std::future<void>> futs;
                std::atomic<int> next{0};
                for (int t = 0; t < std::min(n_threads, b); ++t)
                    futs.push_back(std::async(std::launch::async, [&] {
                        for (int s = next.fetch_add(1); s < b; s = next.fetch_add(1)) run_slot(s);
                    }));
                for (auto& f : futs) f.get();
            }

            // Reduce in sample order; mean over the batch.
            detail::zero_params(grads);
            const Real inv_b = Real(1) / static_cast<Real>(b);
            for (int s = 0; s < b; ++s) {
                detail::accumulate(grads, slots[static_cast<std::size_t>(s)].grad, inv_b);
                epoch_loss += slots[static_cast<std::size_t>(s)].loss;
                epoch_correct += slots[static_cast<std::size_t>(s)].correct ? 1 : 0;
            }
            detail::adam_step(p_model, p_grads, p_m, p_v, ++adam_steps, lr);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.loss = epoch_loss / n;
        m.accuracy = static_cast<double>(epoch_correct) / n;
        result.metrics.push_back(m);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "DV3M", u32 version, u32 tensor count, then per
// tensor: u32 name length, name bytes, u32 rank, u32 dims, f32 data (LE).
// Model configuration rides along as "config/..." tensors.

namespace detail {

inline constexpr char kDv3mMagic[4] = {'D', 'V', '3', 'M'};
inline constexpr std::uint32_t kDv3mVersion = 1;

struct RawTensor {
    std::vector<int> dims;
    std::vector<float> v;
};

inline void append_tensor(std::string& out, const std::string& name,
                          const std::vector<int>& dims, std::span<const float> data) {
    io::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    io::put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : data) io::put_f32(out, f);
}

inline std::vector<float> to_floats(std::span<const int> xs) {
    std::vector<float> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = static_cast<float>(xs[i]);
    return out;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, MultiStreamModel<float>& model) {
    const ModelSpec& s = model.spec;
    auto params = collect_params(model);

    std::vector<std::pair<std::string, detail::RawTensor>> entries;
    auto scalar = [&](const std::string& name, double v) {
        entries.push_back({name, {{1}, {static_cast<float>(v)}}});
    };
    auto ints = [&](const std::string& name, std::span<const int> xs) {
        entries.push_back({name, {{static_cast<int>(xs.size())}, detail::to_floats(xs)}});
    };
    scalar("config/has_motion", s.has_motion ? 1 : 0);
    scalar("config/t2", s.t2);
    scalar("config/motion_channels", s.motion_channels);
    scalar("config/n_sample", s.n_sample);
    scalar("config/classes", s.classes);
    scalar("config/head_dropout", s.head_dropout);
    for (int level = 0; level < 2; ++level) {
        const auto& sa = level == 0 ? s.encoder.sa1 : s.encoder.sa2;
        const std::string p = level == 0 ? "config/sa1" : "config/sa2";
        scalar(p + "/n_centroids", sa.group.n_centroids);
        scalar(p + "/radius", sa.group.radius);
        scalar(p + "/max_neighbors", sa.group.max_neighbors);
        ints(p + "/widths", sa.mlp_widths);
    }
    ints("config/global/widths", s.encoder.global_widths);
    ints("config/head/widths", s.head_widths);

    std::string out;
    out.append(detail::kDv3mMagic, 4);
    io::put_u32(out, detail::kDv3mVersion);
    io::put_u32(out, static_cast<std::uint32_t>(entries.size() + params.size()));
    for (const auto& [name, t] : entries) detail::append_tensor(out, name, t.dims, t.v);
    for (const auto& p : params) detail::append_tensor(out, p.name, p.tensor->dims, p.tensor->v);
    io::write_file(path, out);
}

inline MultiStreamModel<float> load_checkpoint(const std::string& path) {
    std::string buf = io::read_file(path);
    io::Reader r(buf);
    if (r.bytes(4) != std::string(detail::kDv3mMagic, 4))
        throw Error("checkpoint: bad magic in " + path);
    std::uint32_t version = r.u32();
    if (version != detail::kDv3mVersion)
        throw Error("checkpoint: unsupported version " + std::to_string(version));
    std::uint32_t count = r.u32();

    std::vector<std::pair<std::string, detail::RawTensor>> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        std::uint32_t rank = r.u32();
        detail::RawTensor t;
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            t.dims.push_back(static_cast<int>(r.u32()));
            total *= static_cast<std::size_t>(t.dims.back());
        }
        t.v.resize(total);
        for (auto& f : t.v) f = r.f32();
        tensors.emplace_back(std::move(name), std::move(t));
    }

    auto find = [&](const std::string& name) -> const detail::RawTensor& {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw Error("checkpoint: missing tensor " + name);
    };
    auto scalar = [&](const std::string& name) { return static_cast<double>(find(name).v.at(0)); };
    auto int_list = [&](const std::string& name) {
        std::vector<int> out;
        for (float f : find(name).v) out.push_back(static_cast<int>(std::lround(f)));
        return out;
    };

    ModelSpec s;
    s.has_motion = scalar("config/has_motion") != 0;
    s.t2 = static_cast<int>(scalar("config/t2"));
    s.motion_channels = static_cast<int>(scalar("config/motion_channels"));
    s.n_sample = static_cast<int>(scalar("config/n_sample"));
    s.classes = static_cast<int>(scalar("config/classes"));
    s.head_dropout = scalar("config/head_dropout");
    s.encoder.sa1.group = {static_cast<int>(scalar("config/sa1/n_centroids")),
                           scalar("config/sa1/radius"),
                           static_cast<int>(scalar("config/sa1/max_neighbors"))};
    s.encoder.sa1.mlp_widths = int_list("config/sa1/widths");
    s.encoder.sa2.group = {static_cast<int>(scalar("config/sa2/n_centroids")),
                           scalar("config/sa2/radius"),
                           static_cast<int>(scalar("config/sa2/max_neighbors"))};
    s.encoder.sa2.mlp_widths = int_list("config/sa2/widths");
    s.encoder.global_widths = int_list("config/global/widths");
    s.head_widths = int_list("config/head/widths");

    MultiStreamModel<float> model = init_model<float>(s, 0);
    for (auto& p : collect_params(model)) {
        const detail::RawTensor& t = find(p.name);
        if (t.dims != p.tensor->dims) throw Error("checkpoint: shape mismatch for " + p.name);
        p.tensor->v = t.v;
    }
    return model;
}

}  // namespace dv3::net
