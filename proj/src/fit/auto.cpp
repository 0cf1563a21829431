#include "quadrics/fit/fit.hpp"

#include <optional>

namespace quadrics::fit {

FitResult fit_auto(const Segment& seg, const std::vector<QuadricType>& candidates,
                   const FitOptions& options) {
  if (seg.points.rows() < 10) throw DegenerateInput("automatic fit needs at least 10 points");
  if (candidates.empty()) throw InvalidArgument("no candidate types");
  std::vector<FitResult> fits;
  std::string last_error;
  for (const auto& t : candidates) {
    try {
      fits.push_back(fit_constrained(seg, t, options));
    } catch (const DegenerateInput& e) {
      last_error = e.what();
    }
  }
  if (fits.empty()) throw DegenerateInput("every candidate fit failed: " + last_error);

  double best = fits.front().residual;
  for (const auto& f : fits) best = std::min(best, f.residual);
  const double limit = options.parsimony_factor * best + 1e-12;
  const FitResult* chosen = nullptr;
  for (const auto& f : fits) {
    if (f.residual > limit) continue;
    if (!chosen || parsimony_rank(f.type.kind()) < parsimony_rank(chosen->type.kind())) {
      chosen = &f;
    }
  }
  return *chosen;
}

}  // namespace quadrics::fit
