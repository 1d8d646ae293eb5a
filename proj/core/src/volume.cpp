#include "emgc/volume.hpp"

#include <cmath>

#include "emgc/error.hpp"

namespace emgc {

void TransientVolume::validate() const {
    if (width == 0 || height == 0 || bins == 0) throw LengthError("volume: zero dimension");
    if (data.size() != std::size_t{width} * height * bins)
        throw LengthError("volume: data length does not match W*H*T");
    for (std::size_t k = 0; k < data.size(); ++k)
        if (!std::isfinite(data[k]) || data[k] < 0.0f)
            throw DataError("volume: sample is negative or not finite", k);
}

}  // namespace emgc
