#include "stratbound/demo_data.hpp"

namespace stratbound {

Dataset demo_dataset() {
  struct Cell {
    int z;
    School s;
    std::size_t n;
    std::size_t ones;  // nearest integer to n * published outcome rate
  };
  static constexpr Cell kCells[] = {
      {0, School::echs, 43, 43},   {0, School::hq, 220, 213},
      {0, School::lq, 1328, 1142}, {1, School::echs, 1917, 1821},
      {1, School::hq, 53, 48},     {1, School::lq, 259, 218},
  };
  const double prob_treat = 2229.0 / 3820.0;

  DatasetBuilder builder;
  for (const Cell& cell : kCells) {
    for (std::size_t i = 0; i < cell.n; ++i) {
      builder.add_row(cell.z, cell.s, i < cell.ones ? 1 : 0, prob_treat);
    }
  }
  return builder.build();
}

}  // namespace stratbound
