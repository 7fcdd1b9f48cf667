#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sglab/errors.hpp"

namespace sglab {

// Joint counts over two categorical variables.
struct JointTable {
    std::string x_name, y_name;
    std::vector<std::vector<int64_t>> counts;  // [x][y]

    int rows() const { return static_cast<int>(counts.size()); }
    int cols() const { return counts.empty() ? 0 : static_cast<int>(counts[0].size()); }

    int64_t total() const {
        int64_t t = 0;
        for (const auto& row : counts)
            for (int64_t c : row) t += c;
        return t;
    }

    std::vector<int64_t> row_marginals() const {
        std::vector<int64_t> m(rows(), 0);
        for (int i = 0; i < rows(); ++i)
            for (int64_t c : counts[i]) m[i] += c;
        return m;
    }

    std::vector<int64_t> col_marginals() const {
        std::vector<int64_t> m(cols(), 0);
        for (const auto& row : counts)
            for (int j = 0; j < cols(); ++j) m[j] += row[j];
        return m;
    }

    static JointTable zeros(std::string x_name, std::string y_name, int rows, int cols) {
        JointTable t;
        t.x_name = std::move(x_name);
        t.y_name = std::move(y_name);
        t.counts.assign(rows, std::vector<int64_t>(cols, 0));
        return t;
    }
};

}  // namespace sglab
