#pragma once

#include <cstdint>
#include <vector>

#include "mvsgnn/dense.hpp"

namespace mvsgnn {

enum class Aggregation { plain, concat };

// L-layer GCN weights. Layer l maps F_{l-1} -> F_l features; with concat
// aggregation the input side doubles to 2*F_{l-1} (self features stacked on
// the neighborhood aggregate).
struct ModelParams {
    std::vector<DenseMatrix> weights;  // W^(1..L)
    Aggregation aggregation = Aggregation::plain;
    std::vector<Index> dims;           // F_0 .. F_L

    Index num_layers() const { return static_cast<Index>(weights.size()); }
    Index input_rows(Index layer) const {
        const Index f = dims[static_cast<std::size_t>(layer - 1)];
        return aggregation == Aggregation::concat ? 2 * f : f;
    }
    void validate() const;
};

// Glorot-uniform initialization, reproducible from the seed.
ModelParams init_params(const std::vector<Index>& dims, Aggregation agg, std::uint64_t seed);

struct GradBundle {
    std::vector<DenseMatrix> weight_grads;   // shapes match ModelParams
    DenseMatrix per_sample_dz;               // optional raw output-grad rows (B x F_L)

    // Flattened dot/norm over all layers; used by variance measurements.
    double squared_distance(const GradBundle& other) const;
    double squared_norm() const;
};

GradBundle zero_grads(const ModelParams& params);

struct AdamState {
    std::vector<DenseMatrix> m;
    std::vector<DenseMatrix> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr = 0.01;
};

AdamState make_adam(const ModelParams& params, double lr);

// Standard bias-corrected update, in place.
void adam_step(ModelParams& params, const GradBundle& grads, AdamState& state);

} // namespace mvsgnn
