#pragma once

#include <string>

#include "vwp/corpus.hpp"
#include "vwp/rng.hpp"

namespace testing {

// Random record with n images, m characters and k objects of dimension d.
inline vwp::ImageSequenceRecord random_record(vwp::Rng& rng, std::size_t n, std::size_t m,
                                              std::size_t k, std::size_t d) {
  auto vec = [&] {
    std::vector<double> v(d);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  vwp::ImageSequenceRecord r;
  r.id = "rand";
  for (std::size_t a = 0; a < n; ++a) r.images.push_back({"img" + std::to_string(a), vec()});
  for (std::size_t b = 0; b < m; ++b) {
    vwp::CharacterRecord c;
    c.char_id = "char" + std::to_string(b);
    c.instances.push_back({b % n, {0, 0, 1, 1}, 1.0});
    c.representative_feat = vec();
    r.characters.push_back(std::move(c));
  }
  for (std::size_t o = 0; o < k; ++o) r.objects.push_back({"obj" + std::to_string(o), vec()});
  return r;
}

// Sequential dot product, the same summation order as the definition.
inline double brute_dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace testing
