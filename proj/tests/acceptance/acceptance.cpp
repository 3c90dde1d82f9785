// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tcomp/channel.hpp"
#include "tcomp/completion.hpp"
#include "tcomp/dataset.hpp"
#include "tcomp/harness.hpp"
#include "tcomp/stats.hpp"
#include "tcomp/svd.hpp"

using namespace tcomp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- SVT vs eigendecomposition oracle ---

Outcome svt_oracle() {
  constexpr int kMatrices = 100;
  constexpr double kTol = 1e-8;
  std::mt19937_64 g(101);
  std::uniform_int_distribution<std::size_t> rows(1, 8), cols(1, 6);
  std::uniform_real_distribution<double> entry(-1.0, 1.0), tau(0.0, 1.5);
  double worst = 0.0;
  for (int i = 0; i < kMatrices; ++i) {
    ModeMatrix m{1, rows(g), cols(g), {}};
    m.data.resize(m.rows * m.cols);
    for (auto& x : m.data) x = entry(g);
    const double t = tau(g);
    const auto got = oracle::from_mode_matrix(svt(m, t).matrix);
    const auto want = oracle::svt(oracle::from_mode_matrix(m), t);
    const double scale = std::max(oracle::frobenius(want), 1e-12 * oracle::frobenius(oracle::from_mode_matrix(m)));
    worst = std::max(worst, oracle::frobenius_diff(got, want) / scale);
  }
  return {worst <= kTol, fmt("%d matrices up to 8x6, worst relative Frobenius error %.3g (limit %.0e)", kMatrices,
                             worst, kTol)};
}

// --- rank-1 recovery ---

Outcome rank1_recovery() {
  constexpr int kSeeds = 20;
  constexpr Dims kDims{8, 8, 4};
  constexpr std::size_t kLostRows = 3;  // 10% of 32 channel rows
  constexpr double kHalrtc = 1e-6, kSilrtc = 1e-4, kFcp = 1e-4, kSeconds = 60.0;

  FCPParams fcp;
  fcp.rank = 1;
  double w_h = 0, w_s = 0, w_f = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int s = 0; s < kSeeds; ++s) {
    const auto truth = oracle::rank1_tensor(kDims, 1000 + s);
    const auto mask = oracle::lost_rows_mask(kDims, kLostRows, 2000 + s);
    const auto damaged = masked_fill(truth, mask, 0.0f);
    const auto u = IterationBudget::until_convergence();
    w_h = std::max(w_h, oracle::missing_relative_mse(complete_halrtc(damaged, mask, {}, u).tensor, truth, mask));
    w_s = std::max(w_s, oracle::missing_relative_mse(complete_silrtc(damaged, mask, {}, u).tensor, truth, mask));
    w_f = std::max(w_f, oracle::missing_relative_mse(complete_fcp(damaged, mask, fcp, u).tensor, truth, mask));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = w_h < kHalrtc && w_s < kSilrtc && w_f < kFcp && secs < kSeconds;
  return {ok, fmt("worst missing-entry relative MSE over %d tensors: HaLRTC %.3g (<%.0e), SiLRTC %.3g (<%.0e), "
                  "FCP R=1 %.3g (<%.0e); %.1f s (<%.0f s)",
                  kSeeds, w_h, kHalrtc, w_s, kSilrtc, w_f, kFcp, secs, kSeconds)};
}

// --- channel statistics ---

Outcome loss_statistics() {
  constexpr std::size_t kPackets = 100000;
  constexpr double kP = 0.3;
  const double bound = 3.0 * std::sqrt(kP * (1 - kP) / kPackets);  // 0.0043
  constexpr double kWindow = 0.0044;
  const ChannelConfig cfg{kP, 0x5eed};
  const auto a = draw_loss(kPackets, cfg);
  const auto b = draw_loss(kPackets, cfg);
  const double rate = static_cast<double>(a.lost.size()) / kPackets;
  const bool ok = std::abs(rate - kP) <= kWindow && a == b && a.total_packets == kPackets;
  return {ok, fmt("empirical loss %.5f over %zu packets (|dev| %.5f, limit %.4f, 3-sigma %.5f); replay %s", rate,
                  kPackets, std::abs(rate - kP), kWindow, bound, a == b ? "identical" : "DIFFERS")};
}

// --- monotonicity ---

bool non_increasing(const std::vector<double>& v, double slack, double& worst) {
  bool ok = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double rise = (v[i] - v[i - 1]) / std::max(std::abs(v[i - 1]), 1e-300);
    worst = std::max(worst, rise);
    ok = ok && rise <= slack;
  }
  return ok;
}

Outcome monotonicity() {
  constexpr int kFixtures = 10;
  constexpr double kSlack = 1e-7;
  bool ok = true;
  double worst_s = -1, worst_f = -1;
  std::size_t steps_s = 0, steps_f = 0;
  for (int i = 0; i < kFixtures; ++i) {
    const Dims d{8, 7, 6};
    const auto clean = synthetic_low_rank_set(1, d, 3, 300 + i, 0.05).front().tensor;
    const auto damaged = apply_loss(clean, draw_loss(packet_count(d, {}), {0.3, 400u + i}), {});

    SiLRTCParams sp;
    sp.track_objective = true;
    const auto s = complete_silrtc(damaged.tensor, damaged.mask, sp, IterationBudget::until_convergence());
    ok = non_increasing(s.objective, kSlack, worst_s) && ok;
    steps_s += s.objective.size();

    FCPParams fp;
    fp.rank = 3;
    fp.init_seed = 500 + i;
    const auto f = complete_fcp(damaged.tensor, damaged.mask, fp, IterationBudget::until_convergence());
    ok = non_increasing(f.objective, kSlack, worst_f) && ok;
    steps_f += f.objective.size();
  }
  return {ok, fmt("%d fixtures each; largest relative rise SiLRTC %.3g over %zu values, FCP %.3g over %zu values "
                  "(slack %.0e)",
                  kFixtures, worst_s, steps_s, worst_f, steps_f, kSlack)};
}

// --- observed-entry preservation ---

Outcome observed_preservation() {
  constexpr int kFixtures = 50;
  const Dims d{6, 5, 4};
  std::vector<FeatureTensor> train;
  for (int i = 0; i < 6; ++i) train.push_back(oracle::uniform_tensor(d, 700 + i, 0.0, 2.0));
  auto weights = std::make_shared<const ALTeCWeights>(train_altec(train, 1e-3));

  const char* names[] = {"none", "silrtc", "halrtc", "fcp", "altec"};
  int bad = 0, checked = 0;
  std::string first_bad;
  for (int i = 0; i < kFixtures; ++i) {
    const auto clean = oracle::uniform_tensor(d, 800 + i, -1.0, 3.0);
    const double p = 0.1 + 0.6 * (i % 7) / 6.0;
    const auto damaged = apply_loss(clean, draw_loss(packet_count(d, {}), {p, 900u + i}), {});
    for (const char* name : names) {
      const auto out = complete(default_method_config(name, weights), damaged.tensor, damaged.mask);
      ++checked;
      if (!oracle::observed_bitwise_equal(out.tensor, damaged.tensor, damaged.mask)) {
        if (bad++ == 0) first_bad = fmt("%s on fixture %d", name, i);
      }
    }
  }
  return {bad == 0, bad == 0 ? fmt("%d method x fixture outputs bitwise equal on observed entries", checked)
                             : fmt("%d of %d outputs differ, first: %s", bad, checked, first_bad.c_str())};
}

// --- Welch ---

Outcome welch() {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  const auto r = welch_t_test(a, b);
  const double p_ref = oracle::student_t_two_sided_p(r.t_stat, r.dof);
  bool ok = std::abs(r.t_stat + 1.0) < 1e-12 && std::abs(r.dof - 8.0) < 1e-12 && std::abs(r.p_value - p_ref) <= 5e-4 &&
            std::abs(r.p_value - 0.3466) <= 5e-4;

  std::mt19937_64 g(1234);
  std::uniform_int_distribution<int> len(2, 30);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  int asym = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(len(g)), y(len(g));
    const double sx = shift(g), sy = 0.1 + std::abs(shift(g));
    for (auto& v : x) v = nd(g);
    for (auto& v : y) v = sx + sy * nd(g);
    const auto ab = welch_t_test(x, y), ba = welch_t_test(y, x);
    if (!(ab.t_stat == -ba.t_stat && ab.p_value == ba.p_value && ab.dof == ba.dof)) ++asym;
  }
  ok = ok && asym == 0;
  return {ok, fmt("t %.6f, dof %.6f, p %.6f vs integrated density %.6f (tol 5e-4); antisymmetry violations %d/1000",
                  r.t_stat, r.dof, r.p_value, p_ref, asym)};
}

// --- speed match ---

Outcome speed_match() {
  constexpr int kRuns = 20;
  constexpr double kFactor = 1.5;
  const Dims d{14, 14, 256};
  const auto train = synthetic_low_rank_set(8, d, 4, 21, 0.01);
  std::vector<FeatureTensor> tensors;
  for (const auto& t : train) tensors.push_back(t.tensor);
  const auto weights = train_altec(tensors, 1e-3);
  const auto probe_clean = synthetic_low_rank_set(1, d, 4, 22, 0.01).front().tensor;
  const auto probe = apply_loss(probe_clean, draw_loss(packet_count(d, {}), {0.3, 23}), {});

  const double t_ref = median_time_ms([&] { (void)complete_altec(probe.tensor, probe.mask, weights, Exec::serial); },
                                      kRuns);
  bool ok = true;
  std::string detail = fmt("ALTeC median %.2f ms", t_ref);
  for (const char* name : {"silrtc", "halrtc", "fcp"}) {
    const auto cfg = default_method_config(name);
    const auto cal = calibrate_speed_match(weights, cfg, probe.tensor, probe.mask);
    const double t = median_time_ms([&] { (void)complete(cfg, probe.tensor, probe.mask, cal.budget, Exec::serial); },
                                    kRuns);
    ok = ok && t <= kFactor * t_ref;
    detail += fmt("; %s %d iters %.2f ms (%.2fx)", name, cal.budget.iters, t, t / t_ref);
  }
  return {ok, detail + fmt(" [limit %.1fx, median of %d]", kFactor, kRuns)};
}

// --- winner logic ---

std::vector<double> normal_samples(double mean, double sigma, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(mean, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(g);
  return v;
}

Outcome winner_logic() {
  constexpr std::size_t kN = 100;
  constexpr double kSigma = 0.8;
  const std::vector<MethodSamples> table{{"silrtc", normal_samples(34.56, kSigma, kN, 1)},
                                         {"halrtc", normal_samples(53.63, kSigma, kN, 2)},
                                         {"fcp", normal_samples(36.06, kSigma, kN, 3)},
                                         {"altec", normal_samples(41.23, kSigma, kN, 4)}};
  const auto w = declare_winner(table);

  const auto same = normal_samples(50.0, kSigma, kN, 5);
  const std::vector<MethodSamples> identical{{"silrtc", same}, {"halrtc", same}, {"fcp", same}, {"altec", same}};
  const auto w_same = declare_winner(identical);

  const std::vector<MethodSamples> iid{{"silrtc", normal_samples(50.0, kSigma, kN, 6)},
                                       {"halrtc", normal_samples(50.0, kSigma, kN, 7)},
                                       {"fcp", normal_samples(50.0, kSigma, kN, 8)},
                                       {"altec", normal_samples(50.0, kSigma, kN, 9)}};
  const auto w_iid = declare_winner(iid);

  const bool ok = w == std::optional<std::string>("halrtc") && !w_same && !w_iid;
  return {ok, fmt("table-statistics samples -> %s; identical samples -> %s; same-distribution draws -> %s",
                  w ? w->c_str() : "none", w_same ? w_same->c_str() : "none", w_iid ? w_iid->c_str() : "none")};
}

// --- ALTeC correlated set ---

Outcome altec_correlated() {
  constexpr double kTol = 1e-6;
  const Dims d{8, 8, 4};
  auto correlated = [&](std::uint64_t seed) {
    auto base = oracle::uniform_tensor({d.height, d.width, 1}, seed, 0.5, 2.0);
    FeatureTensor t(d);
    for (std::size_t h = 0; h < d.height; ++h)
      for (std::size_t w = 0; w < d.width; ++w)
        for (std::size_t c = 0; c < d.channels; ++c) t(h, w, c) = base(h, w, 0);
    return t;
  };
  std::vector<FeatureTensor> train;
  for (int i = 0; i < 10; ++i) train.push_back(correlated(40 + i));
  const auto weights = train_altec(train, 1e-9);

  double worst = 0.0;
  int cases = 0;
  for (int i = 0; i < 3; ++i) {
    const auto truth = correlated(60 + i);
    for (std::size_t c = 0; c < d.channels; ++c)
      for (std::size_t h = 0; h < d.height; ++h) {
        auto mask = ObservationMask::all_observed(d);
        for (std::size_t w = 0; w < d.width; ++w) mask.set(h, w, c, false);
        const auto out = complete_altec(masked_fill(truth, mask, 0.0f), mask, weights);
        worst = std::max(worst, std::sqrt(oracle::missing_relative_mse(out.tensor, truth, mask)));
        ++cases;
      }
  }
  return {worst <= kTol, fmt("%d single-row losses, worst relative error %.3g (limit %.0e)", cases, worst, kTol)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"svt-oracle-equivalence", svt_oracle},
      {"exact-low-rank-recovery", rank1_recovery},
      {"loss-channel-statistics", loss_statistics},
      {"monotonicity", monotonicity},
      {"observed-entry-preservation", observed_preservation},
      {"welch-correctness", welch},
      {"speed-match-contract", speed_match},
      {"winner-logic", winner_logic},
      {"altec-correlated-recovery", altec_correlated},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
