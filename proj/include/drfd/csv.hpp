#ifndef DRFD_CSV_HPP
#define DRFD_CSV_HPP

#include <string>
#include <vector>

#include "drfd/linalg.hpp"

namespace drfd {

/// Matrix CSV format: first line is the comment header "# dim=<r>x<c>",
/// followed by one row per line, comma separated.
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Matrix& m);

/// Sample dataset: header row with column names, one sample per row.
struct Dataset {
    std::vector<std::string> columns;
    Matrix rows;  // one sample per row
};

Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const std::string& path, const Dataset& d);

}  // namespace drfd

#endif  // DRFD_CSV_HPP
