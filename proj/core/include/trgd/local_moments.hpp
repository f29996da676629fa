#pragma once

#include "trgd/data_models.hpp"
#include "trgd/tensor.hpp"

#include <functional>
#include <optional>

namespace trgd {

// Draws one random tensor per call; evaluated repeatedly by the Monte Carlo
// local-moment estimator.
using TensorSampler = std::function<Tensor(RngStream&)>;

// One direction per mode entering the projection. For the mode-k-excluded
// moment the excluded mode's slot is ignored.
using DirectionTuple = std::vector<Vector>;

struct LocalMomentOptions {
    double eta = 2.0;    // moment order
    double delta = 1.0;  // angular radius in [0, 1]
    // nullopt estimates the all-mode moment; otherwise the moment excluding
    // this mode, maximized over its coordinate directions.
    std::optional<int> excluded_mode;
    int n_dirs = 32;
    int n_samples = 10000;
    // always-included direction tuples (e.g. a known maximizer); must lie
    // within the radius.
    std::vector<DirectionTuple> forced_dirs;
};

// Monte Carlo lower bound on the local moment: samples direction tuples from
// the angular caps around the factor column spaces, estimates the projected
// moment of each by n_samples draws, and returns the maximum.
//
// Directions are drawn as v = sqrt(1 - s^2) u + s z with u on the unit
// sphere of col(U*), z on the unit sphere of its complement, and s the mix
// level. A fixed pool of candidates with s ~ U[0,1] is drawn up front and
// filtered to s <= delta, so direction sets are nested across radii and the
// estimate is monotone in delta for a fixed rng state.
double estimate_local_moment(const TensorSampler& sampler, const Shape& shape, const std::vector<Matrix>& u_stars,
                             const LocalMomentOptions& opts, RngStream& rng);

// Convenience overload drawing from a DistSpec.
double estimate_local_moment(const DistSpec& dist, const Shape& shape, const std::vector<Matrix>& u_stars,
                             const LocalMomentOptions& opts, RngStream& rng);

// Angular deviation sin(arccos ||P_U v||) of a unit vector from col(U).
double direction_deviation(const Matrix& u_star, const Vector& v);

}  // namespace trgd
