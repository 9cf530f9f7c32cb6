#include "zoba/ledger.hpp"

namespace zoba {

void EvalLedger::record(Objective which, std::uint64_t n) {
  if (which == Objective::kInner) {
    count_g += n;
  } else {
    count_f += n;
  }
  per_iteration_last += n;
}

}  // namespace zoba
