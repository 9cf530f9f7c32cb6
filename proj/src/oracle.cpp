#include "zoba/oracle.hpp"

#include <utility>

namespace zoba {

FunctionOracle::FunctionOracle(Index p, Index d, Function g, Function f, Sampler inner_sampler,
                               Sampler outer_sampler)
    : p_(p),
      d_(d),
      g_(std::move(g)),
      f_(std::move(f)),
      inner_sampler_(std::move(inner_sampler)),
      outer_sampler_(std::move(outer_sampler)) {
  if (p_ < 1 || d_ < 1) throw ConfigError("oracle dimensions must be positive");
  if (!g_ || !f_) throw ConfigError("oracle needs both inner and outer objectives");
}

double FunctionOracle::eval_g(const Vector& z, const Vector& x, NoiseToken xi) const {
  return g_(z, x, xi);
}

double FunctionOracle::eval_f(const Vector& z, const Vector& x, NoiseToken zeta) const {
  return f_(z, x, zeta);
}

NoiseToken FunctionOracle::sample_inner_noise(RngStream& rng) const {
  return inner_sampler_ ? inner_sampler_(rng) : 0;
}

NoiseToken FunctionOracle::sample_outer_noise(RngStream& rng) const {
  return outer_sampler_ ? outer_sampler_(rng) : 0;
}

}  // namespace zoba
