#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lhopt::policy {

struct LstmShape {
    std::size_t input = 0;
    std::size_t hidden = 64;
    /// Width of each linear output group read from the hidden state.
    std::vector<std::size_t> outputs;

    std::size_t output_width() const;
    std::size_t parameter_count() const;
    bool operator==(const LstmShape&) const = default;
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;
};

/// Values kept from one forward step for backpropagation through time.
struct LstmStepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> i, f, g, o, c, tanh_c, h;
};

/// Single-layer LSTM with linear output groups, all parameters in one flat
/// vector laid out as W_x (4H x D), W_h (4H x H), b (4H), W_out (O x H),
/// b_out (O). Gate order is input, forget, cell, output.
class LstmNetwork {
public:
    LstmNetwork() = default;
    LstmNetwork(LstmShape shape, std::vector<double> params);

    /// Uniform fan-in input weights, orthogonal recurrent blocks, forget bias 1,
    /// output weights scaled by `head_gain`.
    static LstmNetwork initialized(LstmShape shape, std::uint64_t seed, double head_gain = 0.01);

    const LstmShape& shape() const noexcept { return shape_; }
    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }

    LstmState initial_state() const;

    /// One step; advances `state` and returns the concatenated outputs.
    std::vector<double> step(std::span<const double> x, LstmState& state, LstmStepCache* cache = nullptr) const;

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the outputs of step t is d_outputs[t]. The sequence must
    /// have started from the zero state.
    void backward(const std::vector<LstmStepCache>& caches, const std::vector<std::vector<double>>& d_outputs,
                  std::span<double> grad) const;

private:
    LstmShape shape_;
    std::vector<double> params_;
};

} // namespace lhopt::policy
