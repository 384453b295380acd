#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spinctl/env.hpp"

using namespace spinctl;

namespace {
EnvConfig make_cfg(int n, int src, int tgt) {
  EnvConfig cfg;
  cfg.spec = ChainSpec::uniform(n, src, tgt);
  return cfg;
}
}  // namespace

TEST_CASE("bias wrap lands in [-limit, limit)") {
  CHECK(Env::wrap_delta(9.0 + 3.0, 10.0) == doctest::Approx(-8.0));
  CHECK(Env::wrap_delta(10.0, 10.0) == doctest::Approx(-10.0));
  CHECK(Env::wrap_delta(-10.0, 10.0) == doctest::Approx(-10.0));
  CHECK(Env::wrap_delta(-13.0, 10.0) == doctest::Approx(7.0));
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double w = Env::wrap_delta(rng.uniform(-1e6, 1e6), 10.0);
    CHECK(w >= -10.0);
    CHECK(w < 10.0);
  }
}

TEST_CASE("time wrap lands in (0, limit]") {
  CHECK(Env::wrap_time(30.0, 30.0) == doctest::Approx(30.0));
  CHECK(Env::wrap_time(60.0, 30.0) == doctest::Approx(30.0));
  CHECK(Env::wrap_time(31.0, 30.0) == doctest::Approx(1.0));
  CHECK(Env::wrap_time(-1.0, 30.0) == doctest::Approx(29.0));
  // Just above a period boundary: the eps-shifted formula must fold back.
  const double above = 30.0 + 5e-7;
  const double w = Env::wrap_time(above, 30.0);
  CHECK(w > 0.0);
  CHECK(w <= 30.0);
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double t = Env::wrap_time(rng.uniform(-1e5, 1e5), 30.0);
    CHECK(t > 0.0);
    CHECK(t <= 30.0);
  }
}

TEST_CASE("reset draws uniform controllers inside bounds") {
  Env env(make_cfg(4, 0, 2));
  Rng rng(3);
  double mean[4] = {0, 0, 0, 0};
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto s = env.reset(rng);
    for (int k = 0; k < 4; ++k) {
      CHECK(s.controller.delta[k] >= -10.0);
      CHECK(s.controller.delta[k] < 10.0);
      mean[k] += s.controller.delta[k];
    }
    CHECK(s.controller.read_time > 0.0);
    CHECK(s.controller.read_time <= 30.0);
  }
  const double tol = 3.0 * (20.0 / std::sqrt(12.0)) / std::sqrt(draws);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(mean[k] / draws) <= tol);
  CHECK(env.calls_made() == 0);  // resets are free
}

TEST_CASE("reset is a pure function of the stream") {
  Env env(make_cfg(5, 0, 4));
  Rng a(77), b(77);
  const auto sa = env.reset(a);
  const auto sb = env.reset(b);
  CHECK(sa.controller.delta == sb.controller.delta);
  CHECK(sa.controller.read_time == sb.controller.read_time);
}

TEST_CASE("zero action with exact readout rewards the same controller") {
  Env env(make_cfg(3, 0, 2));
  Rng rng(4);
  EnvState s;
  s.controller = {{0.5, -1.0, 2.0}, 3.0};
  EnvAction zero{{0, 0, 0}, 0.0};
  const auto out = env.step(s, zero, rng);
  CHECK(out.reward ==
        doctest::Approx(env.true_fidelity(out.next_state)).epsilon(1e-15));
  CHECK(out.next_state.controller.delta == s.controller.delta);
  CHECK(out.next_state.controller.read_time ==
        doctest::Approx(s.controller.read_time));
  CHECK(env.calls_made() == 1);
}

TEST_CASE("perfect-transfer controller terminates the episode") {
  Env env(make_cfg(3, 0, 2));
  Rng rng(5);
  EnvState s;
  s.controller = {{0.0, 0.0, 0.0}, std::numbers::pi / std::sqrt(2.0)};
  const auto out = env.step(s, EnvAction{{0, 0, 0}, 0.0}, rng);
  CHECK(out.reward == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(out.done);
}

TEST_CASE("action scaling and per-step clamping") {
  auto cfg = make_cfg(3, 0, 2);
  cfg.action_scale_delta = 1.0;
  cfg.action_scale_time = 3.0;
  Env env(cfg);
  Controller cur{{9.0, 0.0, 0.0}, 15.0};

  // A huge raw action clamps at half the limit: 9 + 5 wraps to -6.
  EnvAction big{{100.0, 0.0, 0.0}, 100.0};
  const auto next = env.apply_action(cur, big);
  CHECK(next.delta[0] == doctest::Approx(-6.0));
  // Time increment clamps at 15 and 15 + 15 = 30 stays inside.
  CHECK(next.read_time == doctest::Approx(30.0));

  // Scale applies before the clamp: raw 1.0 on time moves by 3 seconds.
  EnvAction unit{{0.0, 0.0, 0.0}, 1.0};
  CHECK(env.apply_action(cur, unit).read_time == doctest::Approx(18.0));
}

TEST_CASE("rewards live on the shot lattice when shots are finite") {
  auto cfg = make_cfg(3, 0, 2);
  cfg.noise.shots = 10;
  Env env(cfg);
  Rng rng(6);
  auto s = env.reset(rng);
  for (int i = 0; i < 50; ++i) {
    const auto out = env.step(s, EnvAction{{0.1, 0.1, 0.1}, 0.1}, rng);
    const double scaled = out.reward * 10.0;
    CHECK(std::abs(scaled - std::round(scaled)) <= 1e-12);
    s = out.next_state;
  }
  CHECK(env.calls_made() == 50);
}

TEST_CASE("identical seeds give identical trajectories and counters") {
  for (double sigma : {0.0, 0.05}) {
    auto cfg = make_cfg(4, 0, 2);
    cfg.noise.sigma_noise = sigma;
    cfg.noise.shots = sigma > 0.0 ? 100 : 0;
    Env e1(cfg), e2(cfg);
    Rng r1(123), r2(123);
    auto s1 = e1.reset(r1);
    auto s2 = e2.reset(r2);
    for (int i = 0; i < 25; ++i) {
      EnvAction a{{0.3, -0.2, 0.1, 0.0}, 0.2};
      const auto o1 = e1.step(s1, a, r1);
      const auto o2 = e2.step(s2, a, r2);
      CHECK(o1.reward == o2.reward);
      CHECK(o1.next_state.controller.delta == o2.next_state.controller.delta);
      s1 = o1.next_state;
      s2 = o2.next_state;
    }
    CHECK(e1.calls_made() == e2.calls_made());
  }
}

TEST_CASE("true fidelity is a free channel") {
  auto cfg = make_cfg(4, 0, 2);
  cfg.noise.sigma_noise = 0.1;
  Env env(cfg);
  Rng rng(7);
  const auto s = env.reset(rng);
  for (int i = 0; i < 10; ++i) env.true_fidelity(s);
  CHECK(env.calls_made() == 0);

  // The perceived channel fluctuates around it under structured noise.
  env.reward_at(s.controller, rng);
  CHECK(env.calls_made() == 1);
}

TEST_CASE("noiseless oracle equals the analytic gradient evaluation") {
  Env env(make_cfg(4, 0, 3));
  Rng rng(8);
  const Controller ctrl{{1.0, -0.5, 0.25, 2.0}, 4.0};
  const auto oe = env.oracle_eval(ctrl, rng);
  const auto cg = fidelity_with_gradient(env.config().spec, ctrl);
  CHECK(oe.perceived == cg.value);
  REQUIRE(oe.grad.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(oe.grad[i] == cg.grad[i]);
  CHECK(env.calls_made() == 1);
}

TEST_CASE("noisy oracle differentiates the instance it perceived") {
  auto cfg = make_cfg(4, 0, 2);
  cfg.noise.sigma_noise = 0.05;
  Env env(cfg);
  const Controller ctrl{{1.0, -0.5, 0.25, 2.0}, 4.0};

  // Replaying the same stream shows the perceived value is the fidelity of
  // the perturbed instance whose gradient is returned.
  Rng replay(99);
  const auto p = sample_structured_perturbation(4, 0.05, replay);
  ChainSpec pspec = cfg.spec;
  Controller pctrl = ctrl;
  for (int i = 0; i < 4; ++i) pctrl.delta[i] += p.diag[i];
  for (int i = 0; i < 3; ++i) pspec.couplings[i] += p.off[i];
  const auto expect = fidelity_with_gradient(pspec, pctrl);

  Rng rng(99);
  const auto oe = env.oracle_eval(ctrl, rng);
  CHECK(oe.perceived == doctest::Approx(expect.value).epsilon(1e-15));
  for (int i = 0; i < 5; ++i)
    CHECK(oe.grad[i] == doctest::Approx(expect.grad[i]).epsilon(1e-15));
}
