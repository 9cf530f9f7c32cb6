#include "zoba/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

namespace zoba {

namespace {

// Packs a key into 64 bits: objective(1) anchor(1) stencil(3) sample(29) direction(30).
std::uint64_t pack(const EvalKey& key) {
  const auto direction = key.stencil == Stencil::kCenter ? 0 : key.direction;
  return (static_cast<std::uint64_t>(key.objective) << 63) |
         (static_cast<std::uint64_t>(key.anchor) << 62) |
         (static_cast<std::uint64_t>(key.stencil) << 59) |
         (static_cast<std::uint64_t>(key.sample) << 30) | static_cast<std::uint64_t>(direction);
}

constexpr Index kMaxSamples = Index{1} << 29;
constexpr Index kMaxDirections = Index{1} << 30;

void check_counts(const EstimatorBatch& batch, Index b, Index l, const char* who) {
  if (b < 1 || l < 1) {
    throw ConfigError(std::string(who) + ": batch size and direction count must be >= 1");
  }
  if (b > batch.samples() || l > batch.direction_count()) {
    throw ConfigError(std::string(who) + ": requested (b, l) = (" + std::to_string(b) + ", " +
                      std::to_string(l) + ") exceeds the pool (" +
                      std::to_string(batch.samples()) + ", " +
                      std::to_string(batch.direction_count()) + ")");
  }
}

struct ForwardLayout {
  Objective objective;
  Stencil stencil;
  bool in_z;
};

ForwardLayout layout_of(ForwardEvaluator evaluator) {
  switch (evaluator) {
    case ForwardEvaluator::kOuterInZ:
      return {Objective::kOuter, Stencil::kPlusZ, true};
    case ForwardEvaluator::kOuterInX:
      return {Objective::kOuter, Stencil::kPlusX, false};
    case ForwardEvaluator::kInnerInZ:
      return {Objective::kInner, Stencil::kPlusZ, true};
    case ForwardEvaluator::kInnerInX:
      return {Objective::kInner, Stencil::kPlusX, false};
  }
  throw std::logic_error("unknown forward evaluator");
}

}  // namespace

SolverStreams SolverStreams::from_seed(std::uint64_t master_seed) {
  return SolverStreams{RngStream(derive_seed(master_seed, "directions-w")),
                       RngStream(derive_seed(master_seed, "directions-u")),
                       RngStream(derive_seed(master_seed, "noise-xi")),
                       RngStream(derive_seed(master_seed, "noise-zeta"))};
}

DirectionPool DirectionPool::draw(Index samples, Index directions, Index p, Index d,
                                  RngStream& w_rng, RngStream& u_rng) {
  DirectionPool pool;
  pool.samples = samples;
  pool.directions = directions;
  pool.w.resize(samples * directions, p);
  pool.u.resize(samples * directions, d);
  w_rng.fill_normal(pool.w);
  u_rng.fill_normal(pool.u);
  return pool;
}

EstimatorBatch::EstimatorBatch(const BilevelOracle& oracle, Vector z, Vector x, double h,
                               DirectionPool directions, std::vector<NoiseToken> inner_noise,
                               std::vector<NoiseToken> outer_noise)
    : oracle_(&oracle),
      z_(std::move(z)),
      x_(std::move(x)),
      h_(h),
      directions_(std::move(directions)),
      inner_noise_(std::move(inner_noise)),
      outer_noise_(std::move(outer_noise)) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw ConfigError("discretization h must be positive, got " + std::to_string(h_));
  }
  if (z_.size() != oracle.inner_dim() || x_.size() != oracle.outer_dim()) {
    throw ConfigError("iterate dimensions do not match the oracle");
  }
  if (directions_.samples < 1 || directions_.directions < 1 ||
      directions_.samples >= kMaxSamples || directions_.directions >= kMaxDirections) {
    throw ConfigError("direction pool size out of range");
  }
  if (directions_.w.cols() != z_.size() || directions_.u.cols() != x_.size() ||
      directions_.w.rows() != directions_.samples * directions_.directions ||
      directions_.u.rows() != directions_.w.rows()) {
    throw ConfigError("direction pool shape does not match the iterate");
  }
  if (static_cast<Index>(inner_noise_.size()) != directions_.samples ||
      static_cast<Index>(outer_noise_.size()) != directions_.samples) {
    throw ConfigError("one inner and one outer noise token is required per sample");
  }
}

EstimatorBatch EstimatorBatch::draw(const BilevelOracle& oracle, Vector z, Vector x, double h,
                                    Index samples, Index directions, SolverStreams& streams) {
  if (samples < 1 || directions < 1) throw ConfigError("pool sizes must be >= 1");
  std::vector<NoiseToken> inner(static_cast<std::size_t>(samples));
  std::vector<NoiseToken> outer(static_cast<std::size_t>(samples));
  for (auto& token : inner) token = oracle.sample_inner_noise(streams.inner_noise);
  for (auto& token : outer) token = oracle.sample_outer_noise(streams.outer_noise);
  auto pool = DirectionPool::draw(samples, directions, oracle.inner_dim(), oracle.outer_dim(),
                                  streams.directions_w, streams.directions_u);
  return EstimatorBatch(oracle, std::move(z), std::move(x), h, std::move(pool), std::move(inner),
                        std::move(outer));
}

void EstimatorBatch::set_shifted_anchor(Vector z_shifted, Vector x_shifted) {
  if (z_shifted.size() != z_.size() || x_shifted.size() != x_.size()) {
    throw ConfigError("shifted anchor dimensions do not match the iterate");
  }
  if (has_shifted_) {
    if (z_shifted == z_shifted_ && x_shifted == x_shifted_) return;
    throw std::logic_error("shifted anchor already set to a different point");
  }
  z_shifted_ = std::move(z_shifted);
  x_shifted_ = std::move(x_shifted);
  has_shifted_ = true;
}

const Vector& EstimatorBatch::z(Anchor anchor) const {
  if (anchor == Anchor::kBase) return z_;
  if (!has_shifted_) throw std::logic_error("shifted anchor not set");
  return z_shifted_;
}

const Vector& EstimatorBatch::x(Anchor anchor) const {
  if (anchor == Anchor::kBase) return x_;
  if (!has_shifted_) throw std::logic_error("shifted anchor not set");
  return x_shifted_;
}

void EstimatorBatch::check_range(const EvalKey& key) const {
  if (key.sample < 0 || key.sample >= samples() ||
      (key.stencil != Stencil::kCenter &&
       (key.direction < 0 || key.direction >= direction_count()))) {
    throw std::out_of_range("evaluation key outside the direction pool");
  }
  if (key.anchor == Anchor::kShifted && !has_shifted_) {
    throw std::logic_error("shifted anchor not set");
  }
}

double EstimatorBatch::evaluate(const EvalKey& key) const {
  const Vector& z0 = z(key.anchor);
  const Vector& x0 = x(key.anchor);
  Vector zq = z0;
  Vector xq = x0;
  const Index i = key.sample;
  const Index j = key.direction;
  switch (key.stencil) {
    case Stencil::kCenter:
      break;
    case Stencil::kPlusZ:
      zq = z0 + h_ * directions_.w_row(i, j);
      break;
    case Stencil::kMinusZ:
      zq = z0 - h_ * directions_.w_row(i, j);
      break;
    case Stencil::kPlusX:
      xq = x0 + h_ * directions_.u_row(i, j);
      break;
    case Stencil::kJointPlus:
      zq = z0 + h_ * directions_.w_row(i, j);
      xq = x0 + h_ * directions_.u_row(i, j);
      break;
    case Stencil::kJointMinus:
      zq = z0 - h_ * directions_.w_row(i, j);
      xq = x0 - h_ * directions_.u_row(i, j);
      break;
  }
  const auto idx = static_cast<std::size_t>(i);
  return key.objective == Objective::kInner ? oracle_->eval_g(zq, xq, inner_noise_[idx])
                                            : oracle_->eval_f(zq, xq, outer_noise_[idx]);
}

void EstimatorBatch::ensure(std::span<const EvalKey> keys) {
  std::vector<EvalKey> pending;
  std::vector<std::uint64_t> packed;
  for (const auto& key : keys) {
    check_range(key);
    const auto code = pack(key);
    // Mark as pending so duplicates inside `keys` are evaluated once.
    if (cache_.try_emplace(code, std::numeric_limits<double>::quiet_NaN()).second) {
      pending.push_back(key);
      packed.push_back(code);
    }
  }
  if (pending.empty()) return;

  std::vector<double> values(pending.size());
  const auto n = pending.size();
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(workers_), n);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n; ++t) values[t] = evaluate(pending[t]);
  } else {
    // Each worker owns a contiguous slice of the result table.
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      pool.emplace_back([this, &pending, &values, lo, hi] {
        for (std::size_t t = lo; t < hi; ++t) values[t] = evaluate(pending[t]);
      });
    }
  }

  std::uint64_t inner = 0;
  std::uint64_t outer = 0;
  for (std::size_t t = 0; t < n; ++t) {
    cache_[packed[t]] = values[t];
    (pending[t].objective == Objective::kInner ? inner : outer) += 1;
  }
  fresh_ += n;
  if (ledger_ != nullptr) {
    ledger_->record(Objective::kInner, inner);
    ledger_->record(Objective::kOuter, outer);
  }
}

bool EstimatorBatch::cached(const EvalKey& key) const { return cache_.contains(pack(key)); }

double EstimatorBatch::value(const EvalKey& key) const {
  const auto it = cache_.find(pack(key));
  if (it == cache_.end()) {
    throw std::logic_error("evaluation cache miss: a required stencil value was never computed");
  }
  return it->second;
}

Vector grad_central_inner(EstimatorBatch& batch, Index b, Index l) {
  check_counts(batch, b, l, "grad_central_inner");
  std::vector<EvalKey> keys;
  keys.reserve(static_cast<std::size_t>(2 * b * l));
  for (Index i = 0; i < b; ++i) {
    for (Index j = 0; j < l; ++j) {
      keys.push_back({Objective::kInner, Anchor::kBase, Stencil::kPlusZ, i, j});
      keys.push_back({Objective::kInner, Anchor::kBase, Stencil::kMinusZ, i, j});
    }
  }
  batch.ensure(keys);

  const double h = batch.h();
  Vector sum = Vector::Zero(batch.z().size());
  for (Index i = 0; i < b; ++i) {
    for (Index j = 0; j < l; ++j) {
      const double plus = batch.value({Objective::kInner, Anchor::kBase, Stencil::kPlusZ, i, j});
      const double minus =
          batch.value({Objective::kInner, Anchor::kBase, Stencil::kMinusZ, i, j});
      sum += ((plus - minus) / (2.0 * h)) * batch.directions().w_row(i, j);
    }
  }
  return sum / static_cast<double>(b * l);
}

Vector grad_forward(EstimatorBatch& batch, ForwardEvaluator evaluator, Index b, Index l,
                    Anchor anchor) {
  check_counts(batch, b, l, "grad_forward");
  const auto layout = layout_of(evaluator);
  std::vector<EvalKey> keys;
  keys.reserve(static_cast<std::size_t>(b * (l + 1)));
  for (Index i = 0; i < b; ++i) {
    keys.push_back({layout.objective, anchor, Stencil::kCenter, i, 0});
    for (Index j = 0; j < l; ++j) keys.push_back({layout.objective, anchor, layout.stencil, i, j});
  }
  batch.ensure(keys);

  const double h = batch.h();
  const auto& pool = batch.directions();
  Vector sum = Vector::Zero(layout.in_z ? batch.z().size() : batch.x().size());
  for (Index i = 0; i < b; ++i) {
    const double center = batch.value({layout.objective, anchor, Stencil::kCenter, i, 0});
    for (Index j = 0; j < l; ++j) {
      const double shifted = batch.value({layout.objective, anchor, layout.stencil, i, j});
      const double coeff = (shifted - center) / h;
      if (layout.in_z) {
        sum += coeff * pool.w_row(i, j);
      } else {
        sum += coeff * pool.u_row(i, j);
      }
    }
  }
  return sum / static_cast<double>(b * l);
}

Matrix hess_zz_estimate(EstimatorBatch& batch, Index b, Index l) {
  check_counts(batch, b, l, "hess_zz_estimate");
  std::vector<EvalKey> centers;
  for (Index i = 0; i < b; ++i) {
    centers.push_back({Objective::kInner, Anchor::kBase, Stencil::kCenter, i, 0});
  }
  batch.ensure(centers);

  const double h = batch.h();
  const Index p = batch.z().size();
  Matrix sum = Matrix::Zero(p, p);
  double trace_weight = 0.0;
  for (Index i = 0; i < b; ++i) {
    const double center = batch.value({Objective::kInner, Anchor::kBase, Stencil::kCenter, i, 0});
    for (Index j = 0; j < l; ++j) {
      const double plus = batch.value({Objective::kInner, Anchor::kBase, Stencil::kPlusZ, i, j});
      const double minus =
          batch.value({Objective::kInner, Anchor::kBase, Stencil::kMinusZ, i, j});
      const double c = (plus + minus - 2.0 * center) / (2.0 * h * h);
      const auto w = batch.directions().w_row(i, j);
      sum.noalias() += c * (w * w.transpose());
      trace_weight += c;
    }
  }
  sum.diagonal().array() -= trace_weight;
  return sum / static_cast<double>(b * l);
}

Matrix hess_xz_estimate(EstimatorBatch& batch, Index b, Index l) {
  check_counts(batch, b, l, "hess_xz_estimate");
  std::vector<EvalKey> keys;
  for (Index i = 0; i < b; ++i) {
    keys.push_back({Objective::kInner, Anchor::kBase, Stencil::kCenter, i, 0});
    for (Index j = 0; j < l; ++j) {
      keys.push_back({Objective::kInner, Anchor::kBase, Stencil::kJointPlus, i, j});
      keys.push_back({Objective::kInner, Anchor::kBase, Stencil::kJointMinus, i, j});
    }
  }
  batch.ensure(keys);

  const double h = batch.h();
  const auto& pool = batch.directions();
  Matrix sum = Matrix::Zero(batch.x().size(), batch.z().size());
  for (Index i = 0; i < b; ++i) {
    const double center = batch.value({Objective::kInner, Anchor::kBase, Stencil::kCenter, i, 0});
    for (Index j = 0; j < l; ++j) {
      const double plus =
          batch.value({Objective::kInner, Anchor::kBase, Stencil::kJointPlus, i, j});
      const double minus =
          batch.value({Objective::kInner, Anchor::kBase, Stencil::kJointMinus, i, j});
      const double s = (plus + minus - 2.0 * center) / (2.0 * h * h);
      sum.noalias() += s * (pool.u_row(i, j) * pool.w_row(i, j).transpose());
    }
  }
  return sum / static_cast<double>(b * l);
}

Vector difference_quotient(const Vector& at_shifted, const Vector& at_base, double hbar) {
  return (at_shifted - at_base) / hbar;
}

Vector hvp_surrogate(EstimatorBatch& batch, ForwardEvaluator evaluator, Index b, Index l,
                     double hbar) {
  if (!(hbar > 0.0)) throw ConfigError("hvp_surrogate: hbar must be positive");
  if (evaluator != ForwardEvaluator::kInnerInZ && evaluator != ForwardEvaluator::kInnerInX) {
    throw ConfigError("hvp_surrogate: only inner gradient surrogates are supported");
  }
  if (!batch.has_shifted_anchor()) throw std::logic_error("hvp_surrogate: shifted anchor not set");
  const Vector at_shifted = grad_forward(batch, evaluator, b, l, Anchor::kShifted);
  const Vector at_base = grad_forward(batch, evaluator, b, l, Anchor::kBase);
  return difference_quotient(at_shifted, at_base, hbar);
}

}  // namespace zoba
