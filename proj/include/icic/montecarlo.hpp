#pragma once

// Block-level link simulator: channel draw, pilot observation and MMSE
// estimation, analog or RVQ feedback, BF/IC precoding and the genie-aided
// SINR on the true channels. mc_average splits the blocks into chunks with
// their own seeded substreams so the result does not depend on how many
// worker threads run them.

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "icic/errors.hpp"
#include "icic/rate_analysis.hpp"
#include "icic/system_model.hpp"

namespace icic::mc {

using Vec = Eigen::VectorXcd;
using Rng = std::mt19937_64;
using model::CsiMode;
using model::kCells;
using model::LinkQuality;
using model::Scenario;
using rates::Strategy;
using rates::StrategyPair;

/// Largest per-channel codebook the simulator searches exhaustively.
inline constexpr int kMaxSimulatedBits = 22;

/// Vector of i.i.d. CN(0, 1) entries.
template <class Urbg>
Vec sample_cn(int n, Urbg& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Vec v(n);
    for (int k = 0; k < n; ++k) {
        const double re = nd(rng);
        const double im = nd(rng);
        v[k] = {re, im};
    }
    return v;
}

/// h[user][bs]: channel from BS `bs` to user `user`.
struct ChannelRealization {
    std::array<std::array<Vec, kCells>, kCells> h;
};

template <class Urbg>
ChannelRealization sample_channels(int N_t, Urbg& rng) {
    if (N_t < 1) throw DomainError("sample_channels: N_t must be >= 1");
    ChannelRealization c;
    for (int i = 0; i < kCells; ++i) {
        for (int j = 0; j < kCells; ++j) c.h[i][j] = sample_cn(N_t, rng);
    }
    return c;
}

struct TrainingObservation {
    Vec s;        // despread pilot observation sqrt(q) h + z
    Vec h_tilde;  // MMSE estimate sqrt(q)/(1+q) s
};

template <class Urbg>
TrainingObservation simulate_training(const Vec& h, double Tbar_t, double P_t, double L, Urbg& rng) {
    if (Tbar_t < 0.0 || P_t < 0.0 || L < 0.0) throw DomainError("simulate_training: negative argument");
    const double q = Tbar_t * P_t * L;
    const double gain = std::sqrt(q);
    TrainingObservation out;
    out.s = gain * h + sample_cn(static_cast<int>(h.size()), rng);
    out.h_tilde = (gain / (1.0 + q)) * out.s;
    return out;
}

struct FeedbackLink {
    int T_fb = 16;
    int N_B = 2;
    double P_fb = 1.0;
    double L_uplink = 1.0;
};

struct TrainingLink {
    double Tbar_t = 2.0;
    double P_t = 1.0;
    double L_train = 1.0;
};

/// Uncoded analog feedback of the pilot observation. The observation is sent
/// at unit average power per entry scaled to a receive SNR
/// c = (T_fb/N_B) P_fb L_uplink, so after despreading
///   g = sqrt(c/(1+q)) s + w,  w ~ CN(0, I),
/// and the BS forms the MMSE estimate sqrt(cq/(1+q))/(1+c) g.
template <class Urbg>
Vec simulate_analog_feedback(const Vec& s, const FeedbackLink& up, const TrainingLink& tr, Urbg& rng) {
    const int N_t = static_cast<int>(s.size());
    if (up.N_B < 1 || up.T_fb < up.N_B * up.N_B * N_t) {
        throw DomainError("simulate_analog_feedback: needs T_fb >= N_B^2 N_t");
    }
    if (up.P_fb < 0.0 || up.L_uplink < 0.0 || tr.Tbar_t < 0.0 || tr.P_t < 0.0 || tr.L_train < 0.0) {
        throw DomainError("simulate_analog_feedback: negative argument");
    }
    const double q = tr.Tbar_t * tr.P_t * tr.L_train;
    const double c = static_cast<double>(up.T_fb) / up.N_B * up.P_fb * up.L_uplink;
    const Vec g = std::sqrt(c / (1.0 + q)) * s + sample_cn(N_t, rng);
    return (std::sqrt(c * q / (1.0 + q)) / (1.0 + c)) * g;
}

/// RVQ codebook: 2^B isotropic unit vectors stored as matrix columns.
struct Codebook {
    Eigen::MatrixXcd words;
    int bits = 0;
    std::uint64_t seed = 0;
};

inline Rng seeded_rng(std::uint64_t a, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

template <class Urbg>
Vec sample_unit_vector(int N_t, Urbg& rng) {
    Vec v = sample_cn(N_t, rng);
    return v / v.norm();
}

inline Codebook make_rvq_codebook(int B, int N_t, std::uint64_t seed) {
    if (B < 0 || B > kMaxSimulatedBits) throw DomainError("make_rvq_codebook: B must lie in [0, 22]");
    if (N_t < 1) throw DomainError("make_rvq_codebook: N_t must be >= 1");
    Codebook cb;
    cb.bits = B;
    cb.seed = seed;
    const std::int64_t size = std::int64_t{1} << B;
    cb.words.resize(N_t, size);
    Rng rng = seeded_rng(seed);
    for (std::int64_t k = 0; k < size; ++k) cb.words.col(k) = sample_unit_vector(N_t, rng);
    return cb;
}

struct Quantization {
    Vec codeword;
    double cos2 = 0.0;
    std::int64_t index = 0;
};

/// Codeword maximising |<h/|h|, c>|; the lowest index wins ties.
inline Quantization rvq_quantize(const Vec& h, const Codebook& codebook) {
    const double n = h.norm();
    if (!(n > 0.0)) throw DomainError("rvq_quantize: zero input vector");
    const Vec u = h / n;
    Quantization best;
    best.cos2 = -1.0;
    for (Eigen::Index k = 0; k < codebook.words.cols(); ++k) {
        const double c2 = std::norm(u.dot(codebook.words.col(k)));
        if (c2 > best.cos2) {
            best.cos2 = c2;
            best.index = k;
        }
    }
    best.codeword = codebook.words.col(best.index);
    return best;
}

/// Same as rvq_quantize against a fresh 2^B-word codebook drawn from `rng`,
/// generating codewords one at a time instead of storing them.
template <class Urbg>
Quantization rvq_quantize_fresh(const Vec& h, int B, Urbg& rng) {
    if (B < 0 || B > kMaxSimulatedBits) throw DomainError("rvq_quantize: B must lie in [0, 22]");
    const double n = h.norm();
    if (!(n > 0.0)) throw DomainError("rvq_quantize: zero input vector");
    const Vec u = h / n;
    const int N_t = static_cast<int>(h.size());
    const std::int64_t size = std::int64_t{1} << B;
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Vec c(N_t);
    Quantization best;
    best.cos2 = -1.0;
    for (std::int64_t k = 0; k < size; ++k) {
        double c_norm2 = 0.0;
        double inner_re = 0.0;
        double inner_im = 0.0;
        for (int e = 0; e < N_t; ++e) {
            const double re = nd(rng);
            const double im = nd(rng);
            c[e] = {re, im};
            c_norm2 += re * re + im * im;
            // conj(u_e) * c_e, spelled out to stay off the checked complex multiply
            inner_re += u[e].real() * re + u[e].imag() * im;
            inner_im += u[e].real() * im - u[e].imag() * re;
        }
        const double c2 = (inner_re * inner_re + inner_im * inner_im) / c_norm2;
        if (c2 > best.cos2) {
            best.cos2 = c2;
            best.index = k;
            best.codeword = c / std::sqrt(c_norm2);
        }
    }
    return best;
}

inline Vec precoder_bf(const Vec& h) {
    const double n = h.norm();
    if (!(n > 0.0)) throw DomainError("precoder_bf: zero channel estimate");
    return h / n;
}

/// Normalised projection of h_own onto the orthogonal complement of the
/// neighbor estimates. The projection is applied twice so the output is
/// orthogonal to working precision.
inline Vec precoder_icic(const Vec& h_own, const std::vector<Vec>& neighbors) {
    const auto N = h_own.size();
    const auto k = static_cast<Eigen::Index>(neighbors.size());
    if (k < 1 || k > N - 1) throw DomainError("precoder_icic: need 1 <= neighbors <= N_t - 1");
    Vec w = h_own;
    if (k == 1) {
        const Vec& v = neighbors.front();
        const double v2 = v.squaredNorm();
        if (!(v2 > 0.0)) throw DomainError("precoder_icic: rank-deficient neighbor matrix");
        for (int pass = 0; pass < 2; ++pass) w -= v * (v.dot(w) / v2);
    } else {
        Eigen::MatrixXcd H(N, k);
        for (Eigen::Index c = 0; c < k; ++c) {
            if (neighbors[c].size() != N) throw DomainError("precoder_icic: dimension mismatch");
            H.col(c) = neighbors[c];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(H);
        if (qr.rank() < k) throw DomainError("precoder_icic: rank-deficient neighbor matrix");
        const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(N, k);
        for (int pass = 0; pass < 2; ++pass) w -= Q * (Q.adjoint() * w);
    }
    const double n = w.norm();
    if (!(n > 1e-14 * h_own.norm())) throw DomainError("precoder_icic: projection vanishes");
    return w / n;
}

/// Everything one block produces. csi[u][b] is BS b's view of h[u][b].
struct BlockTrace {
    ChannelRealization channels;
    std::array<std::array<Vec, kCells>, kCells> csi;
    std::array<Vec, kCells> precoder;
    std::array<double, kCells> signal_gain{};        // |h_ii^* f_i|^2
    std::array<double, kCells> interference_gain{};  // |h_ii'^* f_i'|^2
    std::array<double, kCells> sinr{};
    std::array<double, kCells> rate{};
};

/// SINR_i = P_d L_ii |h_ii^* f_i|^2 / (1 + P_d L_ii' |h_ii'^* f_i'|^2), true channels only.
inline void genie_sinr(const ChannelRealization& ch, const std::array<Vec, kCells>& f, const LinkQuality::Grid& L,
                       double P_d, BlockTrace& out) {
    for (int i = 0; i < kCells; ++i) {
        const int nb = model::other(i);
        out.signal_gain[i] = std::norm(ch.h[i][i].dot(f[i]));
        out.interference_gain[i] = std::norm(ch.h[i][nb].dot(f[nb]));
        out.sinr[i] = P_d * L[i][i] * out.signal_gain[i] / (1.0 + P_d * L[i][nb] * out.interference_gain[i]);
        out.rate[i] = std::log2(1.0 + out.sinr[i]);
    }
}

/// CSI available at the BSs after training and feedback for the scenario's mode.
template <class Urbg>
std::array<std::array<Vec, kCells>, kCells> acquire_csi(const Scenario& s, const LinkQuality& q,
                                                        const ChannelRealization& ch, Urbg& rng) {
    std::array<std::array<Vec, kCells>, kCells> csi;
    const auto& f = s.frame;
    for (int i = 0; i < kCells; ++i) {
        for (int j = 0; j < kCells; ++j) {
            if (s.csi_mode == CsiMode::perfect) {
                csi[i][j] = ch.h[i][j];
                continue;
            }
            auto obs = simulate_training(ch.h[i][j], f.Tbar_t(), s.power.P_t, q.L[i][j], rng);
            switch (s.csi_mode) {
                case CsiMode::training: csi[i][j] = std::move(obs.h_tilde); break;
                case CsiMode::analog_fb:
                    csi[i][j] = simulate_analog_feedback(obs.s, FeedbackLink{f.T_fb, f.N_B, s.power.P_fb[i][j], q.L[i][i]},
                                                         TrainingLink{f.Tbar_t(), s.power.P_t, q.L[i][j]}, rng);
                    break;
                case CsiMode::digital_fb:
                    csi[i][j] = rvq_quantize_fresh(obs.h_tilde, s.bits[i][j], rng).codeword;
                    break;
                case CsiMode::perfect: break;
            }
        }
    }
    return csi;
}

inline std::array<Vec, kCells> build_precoders(const std::array<std::array<Vec, kCells>, kCells>& csi,
                                               StrategyPair pair) {
    std::array<Vec, kCells> f;
    for (int j = 0; j < kCells; ++j) {
        const int nb = model::other(j);
        f[j] = pair.of(j) == Strategy::IC ? precoder_icic(csi[j][j], {csi[nb][j]}) : precoder_bf(csi[j][j]);
    }
    return f;
}

template <class Urbg>
BlockTrace run_block(const Scenario& s, const LinkQuality& q, StrategyPair pair, Urbg& rng) {
    BlockTrace t;
    t.channels = sample_channels(s.frame.N_t, rng);
    t.csi = acquire_csi(s, q, t.channels, rng);
    t.precoder = build_precoders(t.csi, pair);
    genie_sinr(t.channels, t.precoder, q.L, s.power.P_d, t);
    return t;
}

template <class Urbg>
BlockTrace run_block(const Scenario& s, StrategyPair pair, Urbg& rng) {
    s.validate();
    return run_block(s, model::compute_link_quality(s), pair, rng);
}

/// Welford accumulator with Chan's pairwise merge.
struct RunningStats {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / total;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }

    /// Sample variance; absent below two samples.
    std::optional<double> variance() const {
        if (n < 2) return std::nullopt;
        return m2 / static_cast<double>(n - 1);
    }

    std::optional<double> std_error() const {
        const auto v = variance();
        if (!v) return std::nullopt;
        return std::sqrt(*v / static_cast<double>(n));
    }
};

struct SimResult {
    std::array<RunningStats, kCells> rate;
    std::array<RunningStats, kCells> sinr;
    std::array<RunningStats, kCells> signal_gain;
    std::array<RunningStats, kCells> interference_gain;
    StrategyPair pair;
    std::uint64_t seed = 0;
    std::int64_t n_blocks = 0;
    std::int64_t chunk_size = 0;
    std::int64_t n_chunks = 0;

    double mean(int user) const { return rate[user].mean; }
    std::optional<double> std_error(int user) const { return rate[user].std_error(); }

    rates::RateEstimate estimate(int user) const {
        return {rate[user].mean, rate[user].std_error().value_or(0.0), rates::Provenance::monte_carlo};
    }
};

namespace detail {

inline SimResult run_chunk(const Scenario& s, const LinkQuality& q, StrategyPair pair, std::uint64_t seed,
                           std::int64_t chunk, std::int64_t blocks) {
    SimResult r;
    Rng rng = seeded_rng(seed, static_cast<std::uint64_t>(chunk));
    for (std::int64_t b = 0; b < blocks; ++b) {
        const BlockTrace t = run_block(s, q, pair, rng);
        for (int i = 0; i < kCells; ++i) {
            r.rate[i].push(t.rate[i]);
            r.sinr[i].push(t.sinr[i]);
            r.signal_gain[i].push(t.signal_gain[i]);
            r.interference_gain[i].push(t.interference_gain[i]);
        }
    }
    return r;
}

}  // namespace detail

/// Averages n_blocks blocks. Chunk c (blocks [c*chunk_size, ...)) draws from
/// a generator seeded by (seed, c); chunks are merged in index order, so the
/// result is bit-identical for any `workers` count.
inline SimResult mc_average(const Scenario& s, StrategyPair pair, std::int64_t n_blocks, std::uint64_t seed,
                            std::int64_t chunk_size, int workers = 1) {
    if (n_blocks < 1) throw DomainError("mc_average: n_blocks must be >= 1");
    if (chunk_size < 1) throw DomainError("mc_average: chunk_size must be >= 1");
    s.validate();
    if (s.csi_mode == CsiMode::digital_fb) {
        for (const auto& row : s.bits) {
            for (int b : row) {
                if (b > kMaxSimulatedBits) throw DomainError("mc_average: digital simulation supports B <= 22");
            }
        }
    }
    const LinkQuality q = model::compute_link_quality(s);
    const std::int64_t n_chunks = (n_blocks + chunk_size - 1) / chunk_size;
    std::vector<SimResult> parts(static_cast<std::size_t>(n_chunks));
    auto blocks_in = [&](std::int64_t c) { return std::min(chunk_size, n_blocks - c * chunk_size); };

    const int threads = static_cast<int>(std::min<std::int64_t>(std::max(workers, 1), n_chunks));
    if (threads <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) parts[c] = detail::run_chunk(s, q, pair, seed, c, blocks_in(c));
    } else {
        std::atomic<std::int64_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::int64_t c = next++; c < n_chunks; c = next++) {
                        parts[c] = detail::run_chunk(s, q, pair, seed, c, blocks_in(c));
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    SimResult out;
    for (const auto& p : parts) {
        for (int i = 0; i < kCells; ++i) {
            out.rate[i].merge(p.rate[i]);
            out.sinr[i].merge(p.sinr[i]);
            out.signal_gain[i].merge(p.signal_gain[i]);
            out.interference_gain[i].merge(p.interference_gain[i]);
        }
    }
    out.pair = pair;
    out.seed = seed;
    out.n_blocks = n_blocks;
    out.chunk_size = chunk_size;
    out.n_chunks = n_chunks;
    return out;
}

}  // namespace icic::mc
