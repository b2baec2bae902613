#include "bsrgan/rng.hpp"

#include "bsrgan/errors.hpp"

namespace bsrgan {

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream) {
  std::uint64_t z = base_seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t SeedStream::index(std::size_t n) {
  if (n == 0) throw ContractError("SeedStream::index over an empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Matrix SeedStream::normal_matrix(std::size_t rows, std::size_t cols, double stddev) {
  Matrix out(rows, cols);
  for (double& v : out.data()) v = stddev * normal();
  return out;
}

Matrix SeedStream::uniform_matrix(std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (double& v : out.data()) v = uniform();
  return out;
}

}  // namespace bsrgan
