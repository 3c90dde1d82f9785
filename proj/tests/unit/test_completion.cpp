#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "oracles.hpp"
#include "tcomp/channel.hpp"
#include "tcomp/completion.hpp"
#include "tcomp/dataset.hpp"

using namespace tcomp;

namespace {

const Dims kRank1Dims{8, 8, 4};

struct Fixture {
  FeatureTensor truth;
  ObservationMask mask;
  FeatureTensor damaged;
};

Fixture rank1_fixture(std::uint64_t seed) {
  Fixture f{oracle::rank1_tensor(kRank1Dims, seed), oracle::lost_rows_mask(kRank1Dims, 3, seed + 1), {}};
  f.damaged = masked_fill(f.truth, f.mask, 0.0f);
  return f;
}

Fixture lossy_fixture(const Dims& d, std::uint64_t seed, double p = 0.3) {
  Fixture f;
  f.truth = synthetic_low_rank_set(1, d, 3, seed, 0.02).front().tensor;
  auto out = apply_loss(f.truth, draw_loss(packet_count(d, {}), {p, seed}), {});
  f.mask = out.mask;
  f.damaged = out.tensor;
  return f;
}

FeatureTensor correlated(const Dims& d, std::uint64_t seed) {
  const auto base = oracle::uniform_tensor({d.height, d.width, 1}, seed, 0.5, 2.0);
  FeatureTensor t(d);
  for (std::size_t h = 0; h < d.height; ++h)
    for (std::size_t w = 0; w < d.width; ++w)
      for (std::size_t c = 0; c < d.channels; ++c) t(h, w, c) = base(h, w, 0);
  return t;
}

std::shared_ptr<const ALTeCWeights> some_weights(const Dims& d) {
  std::vector<FeatureTensor> train;
  for (int i = 0; i < 5; ++i) train.push_back(oracle::uniform_tensor(d, 300 + i, 0.0, 1.0));
  return std::make_shared<const ALTeCWeights>(train_altec(train, 1e-3));
}

}  // namespace

TEST_SUITE("completion") {
  TEST_CASE("all-observed input is returned unchanged") {
    const auto t = oracle::uniform_tensor({5, 4, 3}, 1);
    const auto mask = ObservationMask::all_observed(t.dims());
    const auto w = some_weights(t.dims());
    for (const char* name : {"none", "silrtc", "halrtc", "fcp", "altec"}) {
      CAPTURE(name);
      const auto out = complete(default_method_config(name, w), t, mask);
      CHECK(out.tensor == t);
    }
    CHECK(complete_silrtc(t, mask, {}, IterationBudget::until_convergence()).iterations == 1);
  }

  TEST_CASE("iteration budget contract") {
    CHECK_THROWS_AS(IterationBudget::fixed(0), ContractViolation);
    const auto f = lossy_fixture({6, 6, 4}, 2);
    CHECK(complete_silrtc(f.damaged, f.mask, {}, IterationBudget::fixed(1)).iterations == 1);
    CHECK(complete_halrtc(f.damaged, f.mask, {}, IterationBudget::fixed(3)).iterations == 3);
    CHECK(complete_fcp(f.damaged, f.mask, {}, IterationBudget::fixed(2)).iterations == 2);
  }

  TEST_CASE("rank-1 recovery, HaLRTC at least as good as SiLRTC") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto f = rank1_fixture(50 + 2 * s);
      const auto si = complete_silrtc(f.damaged, f.mask, {}, IterationBudget::until_convergence());
      const auto ha = complete_halrtc(f.damaged, f.mask, {}, IterationBudget::until_convergence());
      FCPParams fp;
      fp.rank = 1;
      const auto fc = complete_fcp(f.damaged, f.mask, fp, IterationBudget::until_convergence());
      const double e_si = oracle::missing_relative_mse(si.tensor, f.truth, f.mask);
      const double e_ha = oracle::missing_relative_mse(ha.tensor, f.truth, f.mask);
      CHECK(e_si < 1e-4);
      CHECK(e_ha < 1e-6);
      CHECK(e_ha <= e_si);
      CHECK(oracle::missing_relative_mse(fc.tensor, f.truth, f.mask) < 1e-4);
    }
  }

  TEST_CASE("HaLRTC consensus residual falls below tol on the rank-1 fixture") {
    const auto f = rank1_fixture(77);
    const HaLRTCParams p;
    const auto out = complete_halrtc(f.damaged, f.mask, p, IterationBudget::until_convergence());
    CHECK(out.converged);
    CHECK(out.iterations < p.max_iters);
    REQUIRE_FALSE(out.consensus_residual.empty());
    CHECK(out.consensus_residual.back() < p.tol);
  }

  TEST_CASE("HaLRTC beats zero-fill on lossy low-rank tensors") {
    int wins = 0;
    const int trials = 20;
    for (int i = 0; i < trials; ++i) {
      const auto f = lossy_fixture({14, 14, 32}, 900 + i);
      const auto out = complete_halrtc(f.damaged, f.mask, {}, IterationBudget::until_convergence());
      const double tc = masked_mse(out.tensor, f.truth, f.mask, EntrySubset::missing);
      const double nc = masked_mse(f.damaged, f.truth, f.mask, EntrySubset::missing);
      wins += tc < nc ? 1 : 0;
    }
    CHECK(wins >= 19);
  }

  TEST_CASE("SiLRTC objective is non-increasing") {
    for (int i = 0; i < 4; ++i) {
      const auto f = lossy_fixture({7, 6, 5}, 10 + i);
      SiLRTCParams p;
      p.track_objective = true;
      const auto out = complete_silrtc(f.damaged, f.mask, p, IterationBudget::until_convergence());
      REQUIRE(out.objective.size() == static_cast<std::size_t>(out.iterations) + 1);
      for (std::size_t k = 1; k < out.objective.size(); ++k)
        CHECK(out.objective[k] <= out.objective[k - 1] * (1 + 1e-7));
    }
  }

  TEST_CASE("FCP objective is non-increasing and the sparse variant is non-negative") {
    for (int i = 0; i < 4; ++i) {
      const auto f = lossy_fixture({7, 6, 5}, 20 + i);
      FCPParams p;
      p.rank = 4;
      p.init_seed = i;
      const auto out = complete_fcp(f.damaged, f.mask, p, IterationBudget::until_convergence());
      for (std::size_t k = 1; k < out.objective.size(); ++k) CHECK(out.objective[k] <= out.objective[k - 1] + 1e-9);

      p.sparse_variant = true;
      const auto sp = complete_fcp(f.damaged, f.mask, p, IterationBudget::until_convergence());
      for (const float v : sp.tensor.data()) CHECK(v >= 0.0f);
    }
  }

  TEST_CASE("FCP parameter guards and determinism") {
    const auto f = lossy_fixture({4, 3, 2}, 3);
    FCPParams p;
    p.rank = 7;
    CHECK_THROWS_AS(complete_fcp(f.damaged, f.mask, p, IterationBudget::fixed(1)), ContractViolation);
    p.rank = 2;
    const auto a = complete_fcp(f.damaged, f.mask, p, IterationBudget::fixed(5));
    const auto b = complete_fcp(f.damaged, f.mask, p, IterationBudget::fixed(5));
    CHECK(a.tensor == b.tensor);
  }

  TEST_CASE("ALTeC on the perfectly correlated set") {
    const Dims d{6, 5, 4};
    std::vector<FeatureTensor> train;
    for (int i = 0; i < 6; ++i) train.push_back(correlated(d, 10 + i));
    const auto w = train_altec(train, 1e-9);
    const auto truth = correlated(d, 99);
    for (std::size_t c = 0; c < d.channels; ++c) {
      auto mask = ObservationMask::all_observed(d);
      for (std::size_t x = 0; x < d.width; ++x) mask.set(2, x, c, false);
      const auto out = complete_altec(masked_fill(truth, mask, 0.0f), mask, w);
      CHECK(std::sqrt(oracle::missing_relative_mse(out.tensor, truth, mask)) < 1e-6);
      CHECK(out.rows_predicted == 1);
    }
  }

  TEST_CASE("ALTeC training invariants") {
    const Dims d{5, 4, 3};
    const std::vector<FeatureTensor> zeros(3, FeatureTensor(d));
    const auto wz = train_altec(zeros, 0.5);
    for (const double x : wz.coefficients) CHECK(x == 0.0);
    for (const double x : wz.bias) CHECK(x == 0.0);

    std::vector<FeatureTensor> train;
    for (int i = 0; i < 4; ++i) train.push_back(oracle::uniform_tensor(d, 40 + i));
    auto twice = train;
    twice.insert(twice.end(), train.begin(), train.end());
    const auto a = train_altec(train, 1e-3);
    const auto b = train_altec(twice, 1e-3);
    for (std::size_t i = 0; i < a.coefficients.size(); ++i) CHECK(std::abs(a.coefficients[i] - b.coefficients[i]) <= 1e-10);
    for (std::size_t i = 0; i < a.bias.size(); ++i) CHECK(std::abs(a.bias[i] - b.bias[i]) <= 1e-10);
    for (std::size_t c = 0; c < d.channels; ++c) CHECK(a.row(c)[c] == 0.0);

    train.push_back(FeatureTensor({5, 4, 2}));
    CHECK_THROWS_AS(train_altec(train, 1e-3), ContractViolation);
  }

  TEST_CASE("ALTeC is linear without bias and predicts each lost row once") {
    const Dims d{6, 5, 4};
    auto w = *some_weights(d);
    std::fill(w.bias.begin(), w.bias.end(), 0.0);
    const auto t = oracle::uniform_tensor(d, 5, 0.0, 1.0);
    const auto loss = apply_loss(t, draw_loss(packet_count(d, {}), {0.3, 6}), {});
    const auto base = complete_altec(loss.tensor, loss.mask, w);
    CHECK(base.rows_predicted == loss.mask.missing_count() / d.width);

    const float alpha = 2.5f;
    FeatureTensor scaled = loss.tensor;
    for (auto& x : scaled.data()) x *= alpha;
    const auto out = complete_altec(scaled, loss.mask, w);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double want = alpha * base.tensor.data()[i];
      CHECK(std::abs(out.tensor.data()[i] - want) <= 1e-6 * std::max(1.0, std::abs(want)));
    }
    CHECK_THROWS_AS(complete_altec(FeatureTensor({6, 5, 3}), ObservationMask::all_observed({6, 5, 3}), w),
                    ContractViolation);
  }

  TEST_CASE("ALTeC weights round-trip through bytes and files") {
    const auto w = *some_weights({4, 4, 3});
    CHECK(deserialize_altec(serialize_altec(w)) == w);
    const auto path = std::filesystem::temp_directory_path() / "tcomp_unit_weights.bin";
    save_altec(w, path);
    CHECK(load_altec(path) == w);
    std::filesystem::remove(path);
    auto bytes = serialize_altec(w);
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize_altec(bytes), IoError);
    bytes = serialize_altec(w);
    bytes.pop_back();
    CHECK_THROWS_AS(deserialize_altec(bytes), IoError);
  }

  TEST_CASE("zero-fill baseline") {
    const auto t = oracle::uniform_tensor({4, 4, 2}, 7);
    CHECK(complete_none(t, ObservationMask::all_observed(t.dims())).tensor == t);
    CHECK(complete_none(t, ObservationMask::all_missing(t.dims())).tensor == FeatureTensor(t.dims()));
    for (int i = 0; i < 10; ++i) {
      const auto mask = oracle::lost_rows_mask(t.dims(), i % 9, 20 + i);
      CHECK(complete_none(t, mask).tensor == masked_fill(t, mask, 0.0f));
    }
  }

  TEST_CASE("observed entries survive every method") {
    const Dims d{6, 5, 4};
    const auto w = some_weights(d);
    for (int i = 0; i < 8; ++i) {
      const auto t = oracle::uniform_tensor(d, 60 + i, -1.0, 2.0);
      const auto loss = apply_loss(t, draw_loss(packet_count(d, {}), {0.4, 70u + i}), {});
      for (const char* name : {"none", "silrtc", "halrtc", "fcp", "altec"}) {
        CAPTURE(name);
        CHECK(oracle::observed_bitwise_equal(complete(default_method_config(name, w), loss.tensor, loss.mask).tensor,
                                             loss.tensor, loss.mask));
      }
    }
  }

  TEST_CASE("method registry") {
    CHECK(method_name(default_method_config("halrtc")) == "halrtc");
    CHECK(is_iterative(default_method_config("fcp")));
    CHECK_FALSE(is_iterative(default_method_config("none")));
    CHECK_THROWS_AS(default_method_config("altec"), ContractViolation);
    CHECK_THROWS_AS(default_method_config("svd"), ContractViolation);
  }

  TEST_CASE("dimension mismatch") {
    const FeatureTensor t({3, 3, 2});
    const auto bad = ObservationMask::all_observed({3, 3, 3});
    CHECK_THROWS_AS(complete_silrtc(t, bad, {}, IterationBudget::fixed(1)), ContractViolation);
    CHECK_THROWS_AS(complete_halrtc(t, bad, {}, IterationBudget::fixed(1)), ContractViolation);
    CHECK_THROWS_AS(complete_fcp(t, bad, {}, IterationBudget::fixed(1)), ContractViolation);
    CHECK_THROWS_AS(complete_none(t, bad), ContractViolation);
  }
}
