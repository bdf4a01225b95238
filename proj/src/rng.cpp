#include "hypochain/rng.hpp"

#include <cmath>

namespace hypochain::rng {

double Stream::gaussian() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
}

}  // namespace hypochain::rng
