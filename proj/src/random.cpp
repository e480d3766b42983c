#include "ddc/random.hpp"

namespace ddc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(master) ^ run) ^ (stream * 0x2545f4914f6cdd1dULL));
}

}  // namespace ddc
