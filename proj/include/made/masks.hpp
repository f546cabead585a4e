#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "made/rng.hpp"

namespace made {

/// Input ordering. m0[d] is the 1-based position of input dimension d in the
/// product of conditionals: the dimension with m0[d] == 1 is modeled
/// unconditionally, the one with m0[d] == D conditions on everything else.
struct Ordering {
    std::vector<int> m0;

    int dims() const { return static_cast<int>(m0.size()); }
};

/// Per-unit connectivity constraints. m[l][k] is the maximum number of
/// ordered inputs that unit k of hidden layer l may depend on, with
/// 1 <= m[l][k] <= D-1 and m[l][k] >= min_k' m[l-1][k'].
struct Connectivity {
    std::vector<std::vector<int>> m;

    int layers() const { return static_cast<int>(m.size()); }
};

/// Identifies how a mask set was sampled: entry `index` of the list rooted
/// at `master`. Enough to regenerate the masks bit-identically.
struct SeedRecord {
    std::uint64_t master = 0;
    std::uint64_t index = 0;
    bool valid = false;
};

/// Binary masks for one network instance. hidden[l] deletes connections
/// into hidden layer l+1, output deletes hidden-to-output connections, and
/// direct (when non-empty) deletes the input-to-output shortcut connections.
/// Mask entries are 0/1 stored as doubles so they multiply directly into the
/// weight matrices. Immutable after construction; safe to share across
/// threads.
struct MaskSet {
    std::vector<Eigen::MatrixXd> hidden;  // K^l x K^{l-1}, K^0 = D
    Eigen::MatrixXd output;               // D x K^L
    Eigen::MatrixXd direct;               // D x D, 0x0 when unused
    Ordering ordering;
    Connectivity connectivity;
    SeedRecord seed;

    int dims() const { return ordering.dims(); }
    bool has_direct() const { return direct.size() > 0; }
};

struct VerifyReport {
    bool pass = false;
    // (d_out, d_in) pairs, 0-based, where a forbidden path exists.
    std::vector<std::pair<int, int>> violations;
};

/// Identity ordering: m0[d] = d+1.
Ordering natural_ordering(int dims);

/// Uniform random permutation (Fisher-Yates on the natural ordering).
Ordering sample_ordering(int dims, Rng& rng);

/// Random ordering that places every dimension in `observed` before every
/// other dimension, uniformly within each group. Needed to impute missing
/// values conditioned on an arbitrary observed set.
Ordering sample_ordering_constrained(int dims, const std::vector<int>& observed,
                                     Rng& rng);

/// Draws m[l][k] uniformly on {min_k' m[l-1][k'], ..., D-1} for each layer.
/// prev_min is the minimum over the input layer, i.e. 1 for any permutation.
Connectivity sample_connectivity(const std::vector<int>& layer_sizes,
                                 int prev_min, int dims, Rng& rng);

/// Builds all masks from an ordering and connectivity constraints:
///   hidden[l](k',k) = 1  iff  m^l(k') >= m^{l-1}(k)   (layer 0 means m0)
///   output(d,k)     = 1  iff  m0(d)   >  m^L(k)
///   direct(d',d)    = 1  iff  m0(d')  >  m0(d)
MaskSet build_masks(const Ordering& ordering, const Connectivity& connectivity,
                    bool use_direct);

/// One full sampling pass: fresh ordering, fresh connectivity, masks.
MaskSet sample_maskset(int dims, const std::vector<int>& layer_sizes,
                       bool use_direct, Rng& rng);

/// Number of network paths from input d to output d', obtained by chaining
/// the masks as matrix products (the direct mask contributes one extra path
/// per allowed shortcut). The autoregressive property holds iff this matrix
/// vanishes at every (d',d) with m0(d') <= m0(d).
Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> connectivity_product(
    const MaskSet& masks);

/// Checks the path-count matrix against the ordering. Violations are report
/// contents, not errors.
VerifyReport verify_autoregressive(const MaskSet& masks);

/// Deterministic entry `index` of the mask list rooted at `master_seed`.
MaskSet mask_list_entry(std::uint64_t master_seed, std::uint64_t index, int dims,
                        const std::vector<int>& layer_sizes, bool use_direct);

/// R independently sampled mask sets, reproducible from master_seed alone.
std::vector<MaskSet> make_mask_list(int count, int dims,
                                    const std::vector<int>& layer_sizes,
                                    std::uint64_t master_seed, bool use_direct);

/// Plain-text dump: ordering line, then one 0/1 matrix block per layer with
/// a `layer=<l> rows=<r> cols=<c>` header. Hidden layers are 1..L, the
/// output mask is layer L+1 and the direct mask (if any) layer L+2.
void dump_masks(const MaskSet& masks, std::ostream& out);

/// Parses a dump back into a mask set (connectivity vectors are not part of
/// the format and are left empty).
MaskSet parse_mask_dump(std::istream& in);

}  // namespace made
