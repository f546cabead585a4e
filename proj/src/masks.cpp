#include "made/masks.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace made {

namespace {

void require_dims(int dims, int lower) {
    if (dims < lower) {
        throw std::invalid_argument("invalid dimension count " +
                                    std::to_string(dims) + " (need >= " +
                                    std::to_string(lower) + ")");
    }
}

}  // namespace

Ordering natural_ordering(int dims) {
    require_dims(dims, 1);
    Ordering o;
    o.m0.resize(dims);
    std::iota(o.m0.begin(), o.m0.end(), 1);
    return o;
}

Ordering sample_ordering(int dims, Rng& rng) {
    Ordering o = natural_ordering(dims);
    for (int i = dims - 1; i > 0; --i) {
        std::swap(o.m0[i], o.m0[rng.uniform_int(0, i)]);
    }
    return o;
}

Ordering sample_ordering_constrained(int dims, const std::vector<int>& observed,
                                     Rng& rng) {
    require_dims(dims, 1);
    std::vector<char> is_observed(dims, 0);
    for (int d : observed) {
        if (d < 0 || d >= dims) {
            throw std::invalid_argument("observed index out of range");
        }
        is_observed[d] = 1;
    }
    const int n_obs =
        static_cast<int>(std::count(is_observed.begin(), is_observed.end(), 1));

    // Positions 1..n_obs go to the observed dimensions, the rest follow.
    std::vector<int> obs_pos(n_obs);
    std::iota(obs_pos.begin(), obs_pos.end(), 1);
    std::vector<int> free_pos(dims - n_obs);
    std::iota(free_pos.begin(), free_pos.end(), n_obs + 1);
    for (int i = n_obs - 1; i > 0; --i) {
        std::swap(obs_pos[i], obs_pos[rng.uniform_int(0, i)]);
    }
    for (int i = dims - n_obs - 1; i > 0; --i) {
        std::swap(free_pos[i], free_pos[rng.uniform_int(0, i)]);
    }

    Ordering o;
    o.m0.resize(dims);
    int oi = 0, fi = 0;
    for (int d = 0; d < dims; ++d) {
        o.m0[d] = is_observed[d] ? obs_pos[oi++] : free_pos[fi++];
    }
    return o;
}

Connectivity sample_connectivity(const std::vector<int>& layer_sizes,
                                 int prev_min, int dims, Rng& rng) {
    require_dims(dims, 2);  // with D < 2 the range {1,...,D-1} is empty
    Connectivity c;
    c.m.reserve(layer_sizes.size());
    int lo = prev_min;
    for (int size : layer_sizes) {
        if (size < 1) {
            throw std::invalid_argument("hidden layer size must be >= 1");
        }
        std::vector<int> layer(size);
        int next_lo = dims;
        for (int& v : layer) {
            v = rng.uniform_int(lo, dims - 1);
            next_lo = std::min(next_lo, v);
        }
        c.m.push_back(std::move(layer));
        lo = next_lo;
    }
    return c;
}

MaskSet build_masks(const Ordering& ordering, const Connectivity& connectivity,
                    bool use_direct) {
    const int dims = ordering.dims();
    require_dims(dims, 1);

    // Connectivity invariants against this ordering: values in [1, D-1] and
    // never below the previous layer's minimum (layer 0 being the ordering,
    // whose minimum is 1 for any permutation).
    int prev_min = 1;
    for (const auto& layer : connectivity.m) {
        if (layer.empty()) {
            throw std::invalid_argument("connectivity layer is empty");
        }
        int layer_min = dims;
        for (int v : layer) {
            if (v < 1 || v > dims - 1) {
                throw std::invalid_argument(
                    "connectivity value " + std::to_string(v) +
                    " outside [1, D-1] for D=" + std::to_string(dims));
            }
            if (v < prev_min) {
                throw std::invalid_argument(
                    "connectivity value below previous layer minimum");
            }
            layer_min = std::min(layer_min, v);
        }
        prev_min = layer_min;
    }

    MaskSet ms;
    ms.ordering = ordering;
    ms.connectivity = connectivity;

    const std::vector<int>* prev = &ordering.m0;
    for (const auto& layer : connectivity.m) {
        const int rows = static_cast<int>(layer.size());
        const int cols = static_cast<int>(prev->size());
        Eigen::MatrixXd mask(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int col = 0; col < cols; ++col) {
                mask(r, col) = layer[r] >= (*prev)[col] ? 1.0 : 0.0;
            }
        }
        ms.hidden.push_back(std::move(mask));
        prev = &layer;
    }

    const std::vector<int>& last = *prev;
    ms.output.resize(dims, static_cast<int>(last.size()));
    for (int d = 0; d < dims; ++d) {
        for (int k = 0; k < static_cast<int>(last.size()); ++k) {
            ms.output(d, k) = ordering.m0[d] > last[k] ? 1.0 : 0.0;
        }
    }

    if (use_direct) {
        ms.direct.resize(dims, dims);
        for (int dout = 0; dout < dims; ++dout) {
            for (int din = 0; din < dims; ++din) {
                ms.direct(dout, din) =
                    ordering.m0[dout] > ordering.m0[din] ? 1.0 : 0.0;
            }
        }
    }
    return ms;
}

MaskSet sample_maskset(int dims, const std::vector<int>& layer_sizes,
                       bool use_direct, Rng& rng) {
    Ordering o = sample_ordering(dims, rng);
    Connectivity c = sample_connectivity(layer_sizes, 1, dims, rng);
    return build_masks(o, c, use_direct);
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> connectivity_product(
    const MaskSet& masks) {
    using IntMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
    const int dims = masks.dims();

    IntMat product = IntMat::Identity(dims, dims);
    for (const auto& mask : masks.hidden) {
        product = (mask.cast<std::int64_t>() * product).eval();
    }
    product = (masks.output.cast<std::int64_t>() * product).eval();
    if (masks.has_direct()) {
        product += masks.direct.cast<std::int64_t>();
    }
    return product;
}

VerifyReport verify_autoregressive(const MaskSet& masks) {
    const auto product = connectivity_product(masks);
    const auto& m0 = masks.ordering.m0;
    VerifyReport report;
    for (int dout = 0; dout < masks.dims(); ++dout) {
        for (int din = 0; din < masks.dims(); ++din) {
            if (m0[dout] <= m0[din] && product(dout, din) != 0) {
                report.violations.emplace_back(dout, din);
            }
        }
    }
    report.pass = report.violations.empty();
    return report;
}

MaskSet mask_list_entry(std::uint64_t master_seed, std::uint64_t index, int dims,
                        const std::vector<int>& layer_sizes, bool use_direct) {
    Rng rng(derive_seed(master_seed, index));
    MaskSet ms = sample_maskset(dims, layer_sizes, use_direct, rng);
    ms.seed = SeedRecord{master_seed, index, true};
    return ms;
}

std::vector<MaskSet> make_mask_list(int count, int dims,
                                    const std::vector<int>& layer_sizes,
                                    std::uint64_t master_seed, bool use_direct) {
    if (count < 1) {
        throw std::invalid_argument("mask list count must be >= 1");
    }
    std::vector<MaskSet> list;
    list.reserve(count);
    for (int i = 0; i < count; ++i) {
        list.push_back(
            mask_list_entry(master_seed, i, dims, layer_sizes, use_direct));
    }
    return list;
}

namespace {

void dump_matrix(const Eigen::MatrixXd& mask, int layer, std::ostream& out) {
    out << "layer=" << layer << " rows=" << mask.rows() << " cols=" << mask.cols()
        << "\n";
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
        for (Eigen::Index col = 0; col < mask.cols(); ++col) {
            if (col) out << ' ';
            out << (mask(r, col) != 0.0 ? '1' : '0');
        }
        out << "\n";
    }
}

}  // namespace

void dump_masks(const MaskSet& masks, std::ostream& out) {
    out << "ordering=";
    for (int d = 0; d < masks.dims(); ++d) {
        if (d) out << ' ';
        out << masks.ordering.m0[d];
    }
    out << "\n";
    int layer = 1;
    for (const auto& mask : masks.hidden) {
        dump_matrix(mask, layer++, out);
    }
    dump_matrix(masks.output, layer++, out);
    if (masks.has_direct()) {
        dump_matrix(masks.direct, layer, out);
    }
}

MaskSet parse_mask_dump(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("ordering=", 0) != 0) {
        throw std::runtime_error("mask dump: missing ordering line");
    }
    MaskSet ms;
    {
        std::istringstream vals(line.substr(9));
        int v;
        while (vals >> v) ms.ordering.m0.push_back(v);
    }
    const int dims = ms.ordering.dims();
    if (dims == 0) {
        throw std::runtime_error("mask dump: empty ordering");
    }

    std::vector<Eigen::MatrixXd> blocks;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int layer = 0, rows = 0, cols = 0;
        if (std::sscanf(line.c_str(), "layer=%d rows=%d cols=%d", &layer, &rows,
                        &cols) != 3) {
            throw std::runtime_error("mask dump: malformed block header: " + line);
        }
        Eigen::MatrixXd mask(rows, cols);
        for (int r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) {
                throw std::runtime_error("mask dump: truncated block");
            }
            std::istringstream vals(line);
            for (int col = 0; col < cols; ++col) {
                int v;
                if (!(vals >> v) || (v != 0 && v != 1)) {
                    throw std::runtime_error("mask dump: bad mask entry");
                }
                mask(r, col) = v;
            }
        }
        blocks.push_back(std::move(mask));
    }
    if (blocks.empty()) {
        throw std::runtime_error("mask dump: no mask blocks");
    }

    // Trailing square D x D block after the output mask is the direct mask.
    bool has_direct = false;
    if (blocks.size() >= 2) {
        const auto& tail = blocks.back();
        const auto& prev = blocks[blocks.size() - 2];
        if (tail.rows() == dims && tail.cols() == dims && prev.rows() == dims) {
            has_direct = true;
        }
    }
    const size_t n_hidden = blocks.size() - 1 - (has_direct ? 1 : 0);
    for (size_t i = 0; i < n_hidden; ++i) {
        ms.hidden.push_back(std::move(blocks[i]));
    }
    ms.output = std::move(blocks[n_hidden]);
    if (has_direct) {
        ms.direct = std::move(blocks[n_hidden + 1]);
    }
    if (ms.output.rows() != dims ||
        (!ms.hidden.empty() && ms.hidden.front().cols() != dims)) {
        throw std::runtime_error("mask dump: shapes inconsistent with ordering");
    }
    return ms;
}

}  // namespace made
