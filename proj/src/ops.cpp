#include "cil/ops.hpp"

#include <algorithm>
#include <cmath>

namespace cil {

Tensor softmax(const Tensor& logits) {
    if (logits.size() == 0)
        throw std::invalid_argument("softmax: empty input");
    ensure_finite(logits, "softmax");
    double mx = *std::max_element(logits.data.begin(), logits.data.end());
    Tensor out = Tensor::zeros({static_cast<int>(logits.size())});
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
    return out;
}

double cross_entropy(const Tensor& probs, int target) {
    if (target < 0 || static_cast<std::size_t>(target) >= probs.size())
        throw std::invalid_argument("cross_entropy: target out of range");
    double p = std::max(probs[static_cast<std::size_t>(target)], 1e-300);
    return -std::log(p);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2)
        throw std::invalid_argument("affine: W must be rank-2");
    int d = w.shape[0], m = w.shape[1];
    if (static_cast<int>(x.size()) != d || static_cast<int>(b.size()) != m)
        throw std::invalid_argument("affine: shape mismatch");
    Tensor y = Tensor::zeros({m});
    for (int j = 0; j < m; ++j) y[j] = b[j];
    for (int i = 0; i < d; ++i) {
        double xi = x[i];
        const double* wrow = w.data.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) y[j] += xi * wrow[j];
    }
    return y;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double h) {
    Tensor g = Tensor::zeros(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = probe[i];
        probe[i] = orig + h;
        double fp = f(probe);
        probe[i] = orig - h;
        double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::invalid_argument("finite_diff_grad: non-finite function value");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

int argmax(const Tensor& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

} // namespace cil
