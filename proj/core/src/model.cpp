#include "mvsgnn/model.hpp"

#include <cmath>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"

namespace mvsgnn {

void ModelParams::validate() const {
    if (dims.size() != weights.size() + 1) throw ShapeMismatchError("dims/weights mismatch");
    for (Index l = 1; l <= num_layers(); ++l) {
        const auto& w = weights[static_cast<std::size_t>(l - 1)];
        if (w.rows != input_rows(l) || w.cols != dims[static_cast<std::size_t>(l)]) {
            throw ShapeMismatchError("weight shape mismatch at layer " + std::to_string(l));
        }
        for (double v : w.data) {
            if (!std::isfinite(v)) throw ShapeMismatchError("non-finite weight");
        }
    }
}

ModelParams init_params(const std::vector<Index>& dims, Aggregation agg, std::uint64_t seed) {
    ModelParams p;
    p.aggregation = agg;
    p.dims = dims;
    Rng rng(seed);
    for (std::size_t l = 1; l < dims.size(); ++l) {
        const Index fan_in = agg == Aggregation::concat ? 2 * dims[l - 1] : dims[l - 1];
        const Index fan_out = dims[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseMatrix w(fan_in, fan_out);
        for (auto& v : w.data) v = bound * (2.0 * rng.uniform01() - 1.0);
        p.weights.push_back(std::move(w));
    }
    p.validate();
    return p;
}

double GradBundle::squared_distance(const GradBundle& other) const {
    double s = 0.0;
    for (std::size_t l = 0; l < weight_grads.size(); ++l) {
        s += frobenius_sq_diff(weight_grads[l], other.weight_grads[l]);
    }
    return s;
}

double GradBundle::squared_norm() const {
    double s = 0.0;
    for (const auto& g : weight_grads) s += frobenius_sq(g);
    return s;
}

GradBundle zero_grads(const ModelParams& params) {
    GradBundle g;
    for (const auto& w : params.weights) g.weight_grads.emplace_back(w.rows, w.cols);
    return g;
}

AdamState make_adam(const ModelParams& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& w : params.weights) {
        s.m.emplace_back(w.rows, w.cols);
        s.v.emplace_back(w.rows, w.cols);
    }
    return s;
}

void adam_step(ModelParams& params, const GradBundle& grads, AdamState& state) {
    if (grads.weight_grads.size() != params.weights.size()) {
        throw ShapeMismatchError("adam: gradient layer count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto& w = params.weights[l];
        const auto& g = grads.weight_grads[l];
        if (!w.same_shape(g)) throw ShapeMismatchError("adam: gradient shape mismatch");
        auto& m = state.m[l];
        auto& v = state.v[l];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            w.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace mvsgnn
