#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvsgnn/dense.hpp"
#include "mvsgnn/sparse.hpp"

namespace mvsgnn {

enum class Split : std::uint8_t { train, val, test, unused };

enum class LabelMode { single, multi };

// Node-classification dataset: symmetric binary adjacency with an empty
// diagonal (self loops enter only at Laplacian normalization), dense
// features, labels, and disjoint split masks.
struct GraphDataset {
    SparseMatrix adjacency;            // binary, symmetric, zero diagonal
    DenseMatrix features;              // N x F0
    LabelMode label_mode = LabelMode::single;
    std::vector<Index> labels_single;  // N (single-label)
    DenseMatrix labels_multi;          // N x C of {0,1} (multi-label)
    std::vector<Split> splits;         // N

    Index num_nodes() const { return adjacency.n_rows; }
    Index feature_dim() const { return features.cols; }
    Index num_classes() const;

    std::vector<Index> ids_in_split(Split s) const;
    std::vector<Index> train_ids() const { return ids_in_split(Split::train); }

    // Checks symmetry, zero diagonal, finite features, label ranges.
    void validate() const;
};

// Planted-partition graph: `blocks` communities of `nodes_per_block` nodes,
// edge probability p_in within a block and p_out across blocks. Features are
// the block mean plus unit Gaussian noise scaled by noise_sigma; labels are
// the block id (single) or a two-hot block pattern (multi). Splits are drawn
// 60/20/20 train/val/test. Reproducible: same seed, same bytes.
GraphDataset synth_sbm(Index blocks, Index nodes_per_block, double p_in, double p_out,
                       Index feature_dim, LabelMode label_mode, std::uint64_t seed,
                       double noise_sigma = 1.0);

// Text formats:
//   edges:    one "u<TAB>v" pair of 0-based ids per line, '#' comments
//   features: CSV, row i = node i
//   labels:   one integer per line (single) or 0/1 CSV (multi)
//   splits:   one of {t,v,s,u} per line
// Undirected edges are symmetrized, exact duplicates deduplicated. Edge
// weights are rejected: the model is unweighted.
GraphDataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                          const std::string& label_path, const std::string& split_path);

void save_dataset(const GraphDataset& ds, const std::string& edge_path,
                  const std::string& feature_path, const std::string& label_path,
                  const std::string& split_path);

} // namespace mvsgnn
