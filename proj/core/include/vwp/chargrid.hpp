#pragma once

#include <string>
#include <vector>

#include "vwp/corpus.hpp"
#include "vwp/tensor.hpp"

namespace vwp {

/// Images x characters matrix of feature dot products. Row a, column b holds
/// dot(global feature of image a, representative feature of character b).
struct CharacterGrid {
  Tensor values;  // N x M
  std::vector<std::string> image_ids;
  std::vector<std::string> column_ids;

  std::size_t images() const { return image_ids.size(); }
  std::size_t columns() const { return column_ids.size(); }
};

inline constexpr std::size_t kGridMaxImages = 10;
inline constexpr std::size_t kGridMaxCharacters = 5;

CharacterGrid compute_grid(const ImageSequenceRecord& seq);
/// Same construction over detected object features.
CharacterGrid compute_object_grid(const ImageSequenceRecord& seq);
/// Character columns followed by object columns.
CharacterGrid compute_entity_grid(const ImageSequenceRecord& seq);

/// Lays the grid into a zero-filled n_max x m_max frame, row-major; cell
/// (a, b) lands at a * m_max + b.
std::vector<double> flatten_pad(const CharacterGrid& grid, std::size_t n_max, std::size_t m_max);

/// Shading bucket 0..4 of each cell after min-max normalisation over the
/// whole grid. A constant grid is bucket 0 everywhere.
std::vector<std::vector<int>> shade_buckets(const CharacterGrid& grid);

struct GridReport {
  std::string csv;
  std::string table;
};

/// CSV has a header "image_id,<column ids...>" and one row per image with
/// values printed at round-trip precision.
GridReport grid_report(const CharacterGrid& grid);

/// Inverse of the CSV half of grid_report.
CharacterGrid parse_grid_csv(const std::string& csv);

}  // namespace vwp
