#pragma once

#include <cstdint>
#include <functional>

#include "zoba/common.hpp"
#include "zoba/rng.hpp"

namespace zoba {

// Opaque noise realization produced by an oracle (e.g. a sampled row index).
// Solvers only pass tokens back to the oracle that made them.
using NoiseToken = std::uint64_t;

/// Stochastic black-box bilevel problem: inner g(z, x, xi), outer f(z, x, zeta)
/// with z in R^p and x in R^d.
///
/// eval_g / eval_f must be deterministic in (z, x, token) and safe to call
/// concurrently from several threads.
class BilevelOracle {
 public:
  virtual ~BilevelOracle() = default;

  virtual Index inner_dim() const = 0;  // p
  virtual Index outer_dim() const = 0;  // d

  virtual double eval_g(const Vector& z, const Vector& x, NoiseToken xi) const = 0;
  virtual double eval_f(const Vector& z, const Vector& x, NoiseToken zeta) const = 0;

  virtual NoiseToken sample_inner_noise(RngStream& rng) const = 0;
  virtual NoiseToken sample_outer_noise(RngStream& rng) const = 0;
};

// Oracle assembled from callables. Without samplers every token is 0, which
// makes the problem deterministic.
class FunctionOracle final : public BilevelOracle {
 public:
  using Function = std::function<double(const Vector& z, const Vector& x, NoiseToken)>;
  using Sampler = std::function<NoiseToken(RngStream&)>;

  FunctionOracle(Index p, Index d, Function g, Function f, Sampler inner_sampler = {},
                 Sampler outer_sampler = {});

  Index inner_dim() const override { return p_; }
  Index outer_dim() const override { return d_; }
  double eval_g(const Vector& z, const Vector& x, NoiseToken xi) const override;
  double eval_f(const Vector& z, const Vector& x, NoiseToken zeta) const override;
  NoiseToken sample_inner_noise(RngStream& rng) const override;
  NoiseToken sample_outer_noise(RngStream& rng) const override;

 private:
  Index p_;
  Index d_;
  Function g_;
  Function f_;
  Sampler inner_sampler_;
  Sampler outer_sampler_;
};

}  // namespace zoba
