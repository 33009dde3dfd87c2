#include "ppmkit/rng.hpp"

#include <algorithm>
#include <numeric>

#include "ppmkit/error.hpp"

namespace ppm {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) raise(ErrorKind::InvalidArgument, "cannot sample ", k, " items from ", n);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace ppm
