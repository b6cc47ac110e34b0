#ifndef SKYHEAL_RNG_HPP
#define SKYHEAL_RNG_HPP

#include <cstdint>
#include <random>

namespace skyheal {

// std::uniform_real_distribution is implementation-defined; this mapping
// keeps generated scenarios and particles identical across standard
// libraries.
inline double uniform01(std::mt19937_64& engine)
{
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& engine, double lo, double hi)
{
  return lo + (hi - lo) * uniform01(engine);
}

} // namespace skyheal

#endif // SKYHEAL_RNG_HPP
