#pragma once

#include <string>
#include <vector>

namespace reage::nn {

/// One row of an architecture shape trace. `dims` are listed in the order the
/// architecture tables print them (height, width, then channel/time axes).
struct ShapeRow {
    std::string layer;
    std::vector<int> dims;

    std::string str() const
    {
        std::string s;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += " × ";
            s += std::to_string(dims[i]);
        }
        return s;
    }
};

using ShapeTrace = std::vector<ShapeRow>;

} // namespace reage::nn
