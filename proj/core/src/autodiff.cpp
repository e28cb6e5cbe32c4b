#include "semstyle/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace semstyle::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " +
                                    b.value().shape_str());
}

void check_rank3(const Var& x, const char* op) {
    if (x.value().rank() != 3) throw std::invalid_argument(std::string(op) + ": expected rank-3 (C,H,W) input");
}

}  // namespace

Var Var::leaf(Tensor t, bool requires_grad) {
    Var v;
    v.n_ = std::make_shared<Node>();
    v.n_->value = std::move(t);
    v.n_->requires_grad = requires_grad;
    v.n_->id = g_next_id.fetch_add(1);
    return v;
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    Var v;
    v.n_ = std::make_shared<Node>();
    v.n_->value = std::move(value);
    v.n_->id = g_next_id.fetch_add(1);
    for (const Var& p : parents) {
        v.n_->parents.push_back(p.node());
        if (p.requires_grad()) v.n_->requires_grad = true;
    }
    if (v.n_->requires_grad) v.n_->backprop = std::move(backprop);
    return v;
}

void backward(const Var& root) {
    if (!root.defined()) throw std::invalid_argument("backward: undefined root");
    if (root.value().numel() != 1) throw std::invalid_argument("backward: root must be scalar");
    if (!root.requires_grad()) return;

    // Collect the grad-requiring subgraph; zero every grad buffer.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{root.node().get()};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        n->grad = Tensor::zeros(n->value.shape());
        for (const NodePtr& p : n->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

    root.node()->grad[0] = 1.0;
    for (Node* n : order) {
        if (n->backprop) n->backprop(*n);
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            Node* p = self.parents[static_cast<size_t>(k)].get();
            if (!p->requires_grad) continue;
            for (std::int64_t i = 0; i < self.grad.numel(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
            if (pa->requires_grad) pa->grad[i] += self.grad[i];
            if (pb->requires_grad) pb->grad[i] -= self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
            if (pa->requires_grad) pa->grad[i] += self.grad[i] * pb->value[i];
            if (pb->requires_grad) pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    return make_op(std::move(out), {a}, [s](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) p->grad[i] += s * self.grad[i];
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += s;
    return make_op(std::move(out), {a}, [](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) p->grad[i] += self.grad[i];
    });
}

Var relu(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return make_op(std::move(out), {a}, [](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i)
            if (p->value[i] > 0.0) p->grad[i] += self.grad[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    return make_op(std::move(out), {a}, [](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
            double y = self.value[i];
            p->grad[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Var gelu(const Var& a) {
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        double x = out[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
    }
    return make_op(std::move(out), {a}, [](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) {
            double x = p->value[i];
            double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
            p->grad[i] += self.grad[i] * (cdf + x * pdf);
        }
    });
}

// ---------------------------------------------------------------------------
// reductions / vector ops
// ---------------------------------------------------------------------------

Var sum(const Var& a) {
    double s = 0.0;
    for (std::int64_t i = 0; i < a.value().numel(); ++i) s += a.value()[i];
    return make_op(Tensor::scalar(s), {a}, [](Node& self) {
        Node* p = self.parents[0].get();
        double g = self.grad[0];
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += g;
    });
}

Var mean(const Var& a) {
    std::int64_t n = a.value().numel();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += a.value()[i];
    double inv = 1.0 / static_cast<double>(n);
    return make_op(Tensor::scalar(s * inv), {a}, [inv](Node& self) {
        Node* p = self.parents[0].get();
        double g = self.grad[0] * inv;
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += g;
    });
}

Var dot(const Var& a, const Var& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::int64_t i = 0; i < a.value().numel(); ++i) s += a.value()[i] * b.value()[i];
    return make_op(Tensor::scalar(s), {a, b}, [](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        double g = self.grad[0];
        for (std::int64_t i = 0; i < pa->value.numel(); ++i) {
            if (pa->requires_grad) pa->grad[i] += g * pb->value[i];
            if (pb->requires_grad) pb->grad[i] += g * pa->value[i];
        }
    });
}

Var mse(const Var& a, const Var& b) {
    check_same_shape(a, b, "mse");
    std::int64_t n = a.value().numel();
    if (n == 0) throw std::invalid_argument("mse: empty tensor");
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double d = a.value()[i] - b.value()[i];
        s += d * d;
    }
    double inv = 1.0 / static_cast<double>(n);
    return make_op(Tensor::scalar(s * inv), {a, b}, [inv](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        double g = self.grad[0] * inv * 2.0;
        for (std::int64_t i = 0; i < pa->value.numel(); ++i) {
            double d = pa->value[i] - pb->value[i];
            if (pa->requires_grad) pa->grad[i] += g * d;
            if (pb->requires_grad) pb->grad[i] -= g * d;
        }
    });
}

Var matvec(const Var& w, const Var& x) { return matvec(w, x, Var()); }

Var matvec(const Var& w, const Var& x, const Var& bias) {
    if (w.value().rank() != 2 || x.value().rank() != 1) throw std::invalid_argument("matvec: expected (D,K) and (K)");
    int d = w.value().dim(0);
    int k = w.value().dim(1);
    if (x.value().dim(0) != k) throw std::invalid_argument("matvec: inner dimension mismatch");
    Tensor out({d});
    const double* wd = w.value().data();
    const double* xd = x.value().data();
    for (int r = 0; r < d; ++r) {
        double s = bias.defined() ? bias.value()[r] : 0.0;
        const double* row = wd + static_cast<std::int64_t>(r) * k;
        for (int c = 0; c < k; ++c) s += row[c] * xd[c];
        out[r] = s;
    }
    std::vector<Var> parents{w, x};
    if (bias.defined()) parents.push_back(bias);
    return make_op(std::move(out), std::move(parents), [d, k](Node& self) {
        Node* pw = self.parents[0].get();
        Node* px = self.parents[1].get();
        Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        for (int r = 0; r < d; ++r) {
            double g = self.grad[r];
            const double* wrow = pw->value.data() + static_cast<std::int64_t>(r) * k;
            if (pw->requires_grad) {
                double* gwrow = pw->grad.data() + static_cast<std::int64_t>(r) * k;
                for (int c = 0; c < k; ++c) gwrow[c] += g * px->value[c];
            }
            if (px->requires_grad)
                for (int c = 0; c < k; ++c) px->grad[c] += g * wrow[c];
            if (pb && pb->requires_grad) pb->grad[r] += g;
        }
    });
}

Var cosine_similarity(const Var& a, const Var& b) {
    check_same_shape(a, b, "cosine_similarity");
    std::int64_t n = a.value().numel();
    double daa = 0.0, dbb = 0.0, dab = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        daa += a.value()[i] * a.value()[i];
        dbb += b.value()[i] * b.value()[i];
        dab += a.value()[i] * b.value()[i];
    }
    double na = std::sqrt(daa), nb = std::sqrt(dbb);
    if (na <= 0.0 || nb <= 0.0) throw std::domain_error("cosine_similarity: zero-norm input");
    double c = dab / (na * nb);
    double cc = std::clamp(c, -1.0, 1.0);
    return make_op(Tensor::scalar(cc), {a, b}, [na, nb, c](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        double g = self.grad[0];
        double inv = 1.0 / (na * nb);
        for (std::int64_t i = 0; i < pa->value.numel(); ++i) {
            if (pa->requires_grad) pa->grad[i] += g * (pb->value[i] * inv - c * pa->value[i] / (na * na));
            if (pb->requires_grad) pb->grad[i] += g * (pa->value[i] * inv - c * pb->value[i] / (nb * nb));
        }
    });
}

Var l2_normalize(const Var& x, double eps) {
    std::int64_t n = x.value().numel();
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) ss += x.value()[i] * x.value()[i];
    double nrm = std::max(std::sqrt(ss), eps);
    Tensor out = x.value();
    for (std::int64_t i = 0; i < n; ++i) out[i] /= nrm;
    return make_op(std::move(out), {x}, [nrm](Node& self) {
        Node* p = self.parents[0].get();
        std::int64_t n2 = p->value.numel();
        double xg = 0.0;
        for (std::int64_t i = 0; i < n2; ++i) xg += p->value[i] * self.grad[i];
        double inv3 = 1.0 / (nrm * nrm * nrm);
        for (std::int64_t i = 0; i < n2; ++i) p->grad[i] += self.grad[i] / nrm - p->value[i] * xg * inv3;
    });
}

// ---------------------------------------------------------------------------
// image ops
// ---------------------------------------------------------------------------

Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
    check_rank3(x, "conv2d");
    if (w.value().rank() != 4) throw std::invalid_argument("conv2d: weight must be (O,I,kh,kw)");
    int ci = x.value().dim(0), h = x.value().dim(1), wd = x.value().dim(2);
    int co = w.value().dim(0), wi = w.value().dim(1), kh = w.value().dim(2), kw = w.value().dim(3);
    if (wi != ci) throw std::invalid_argument("conv2d: channel mismatch");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    int oh = (h + 2 * pad - kh) / stride + 1;
    int ow = (wd + 2 * pad - kw) / stride + 1;
    if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: output would be empty");

    Tensor out({co, oh, ow});
    if (bias.defined()) {
        for (int o = 0; o < co; ++o) {
            double b = bias.value()[o];
            double* op = out.data() + static_cast<std::int64_t>(o) * oh * ow;
            for (int i = 0; i < oh * ow; ++i) op[i] = b;
        }
    }
    const double* xd = x.value().data();
    const double* wdp = w.value().data();
    for (int o = 0; o < co; ++o) {
        double* outp = out.data() + static_cast<std::int64_t>(o) * oh * ow;
        for (int i = 0; i < ci; ++i) {
            const double* inp = xd + static_cast<std::int64_t>(i) * h * wd;
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    double wv = wdp[((static_cast<std::int64_t>(o) * ci + i) * kh + ky) * kw + kx];
                    int y0 = std::max(0, (pad - ky + stride - 1) / stride);
                    int y1 = std::min(oh - 1, (h - 1 + pad - ky) / stride);
                    int x0 = std::max(0, (pad - kx + stride - 1) / stride);
                    int x1 = std::min(ow - 1, (wd - 1 + pad - kx) / stride);
                    for (int oy = y0; oy <= y1; ++oy) {
                        const double* irow = inp + static_cast<std::int64_t>(oy * stride - pad + ky) * wd;
                        double* orow = outp + static_cast<std::int64_t>(oy) * ow;
                        for (int ox = x0; ox <= x1; ++ox) orow[ox] += wv * irow[ox * stride - pad + kx];
                    }
                }
            }
        }
    }
    std::vector<Var> parents{x, w};
    if (bias.defined()) parents.push_back(bias);
    return make_op(std::move(out), std::move(parents), [ci, h, wd, co, kh, kw, stride, pad, oh, ow](Node& self) {
        Node* px = self.parents[0].get();
        Node* pw = self.parents[1].get();
        Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        const double* god = self.grad.data();
        for (int o = 0; o < co; ++o) {
            const double* gop = god + static_cast<std::int64_t>(o) * oh * ow;
            if (pb && pb->requires_grad) {
                double s = 0.0;
                for (int i = 0; i < oh * ow; ++i) s += gop[i];
                pb->grad[o] += s;
            }
            for (int i = 0; i < ci; ++i) {
                const double* inp = px->value.data() + static_cast<std::int64_t>(i) * h * wd;
                double* ginp = px->requires_grad ? px->grad.data() + static_cast<std::int64_t>(i) * h * wd : nullptr;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        std::int64_t widx = ((static_cast<std::int64_t>(o) * ci + i) * kh + ky) * kw + kx;
                        double wv = pw->value[widx];
                        double gw = 0.0;
                        int y0 = std::max(0, (pad - ky + stride - 1) / stride);
                        int y1 = std::min(oh - 1, (h - 1 + pad - ky) / stride);
                        int x0 = std::max(0, (pad - kx + stride - 1) / stride);
                        int x1 = std::min(ow - 1, (wd - 1 + pad - kx) / stride);
                        for (int oy = y0; oy <= y1; ++oy) {
                            int iy = oy * stride - pad + ky;
                            const double* irow = inp + static_cast<std::int64_t>(iy) * wd;
                            const double* grow = gop + static_cast<std::int64_t>(oy) * ow;
                            double* girow = ginp ? ginp + static_cast<std::int64_t>(iy) * wd : nullptr;
                            for (int ox = x0; ox <= x1; ++ox) {
                                double g = grow[ox];
                                int ix = ox * stride - pad + kx;
                                gw += g * irow[ix];
                                if (girow) girow[ix] += g * wv;
                            }
                        }
                        if (pw->requires_grad) pw->grad[widx] += gw;
                    }
                }
            }
        }
    });
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    check_rank3(x, "instance_norm");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    if (gamma.value().numel() != c || beta.value().numel() != c)
        throw std::invalid_argument("instance_norm: affine parameters must have one entry per channel");
    std::int64_t m = static_cast<std::int64_t>(h) * w;
    Tensor out({c, h, w});
    std::vector<double> means(static_cast<size_t>(c)), istds(static_cast<size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        const double* xp = x.value().data() + ch * m;
        double mu = 0.0;
        for (std::int64_t i = 0; i < m; ++i) mu += xp[i];
        mu /= static_cast<double>(m);
        double var = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            double d = xp[i] - mu;
            var += d * d;
        }
        var /= static_cast<double>(m);
        double istd = 1.0 / std::sqrt(var + eps);
        means[static_cast<size_t>(ch)] = mu;
        istds[static_cast<size_t>(ch)] = istd;
        double g = gamma.value()[ch], b = beta.value()[ch];
        double* op = out.data() + ch * m;
        for (std::int64_t i = 0; i < m; ++i) op[i] = g * (xp[i] - mu) * istd + b;
    }
    return make_op(std::move(out), {x, gamma, beta}, [c, m, means, istds](Node& self) {
        Node* px = self.parents[0].get();
        Node* pg = self.parents[1].get();
        Node* pbt = self.parents[2].get();
        for (int ch = 0; ch < c; ++ch) {
            const double* xp = px->value.data() + ch * m;
            const double* gp = self.grad.data() + ch * m;
            double mu = means[static_cast<size_t>(ch)], istd = istds[static_cast<size_t>(ch)];
            double gsum = 0.0, gxh = 0.0;
            for (std::int64_t i = 0; i < m; ++i) {
                double xh = (xp[i] - mu) * istd;
                gsum += gp[i];
                gxh += gp[i] * xh;
            }
            if (pg->requires_grad) pg->grad[ch] += gxh;
            if (pbt->requires_grad) pbt->grad[ch] += gsum;
            if (px->requires_grad) {
                double gamma_v = pg->value[ch];
                double inv_m = 1.0 / static_cast<double>(m);
                double* gxp = px->grad.data() + ch * m;
                for (std::int64_t i = 0; i < m; ++i) {
                    double xh = (xp[i] - mu) * istd;
                    gxp[i] += gamma_v * istd * (gp[i] - gsum * inv_m - xh * gxh * inv_m);
                }
            }
        }
    });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    std::int64_t n = x.value().numel();
    if (gamma.value().numel() != n || beta.value().numel() != n)
        throw std::invalid_argument("layer_norm: parameter shape mismatch");
    double mu = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mu += x.value()[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double d = x.value()[i] - mu;
        var += d * d;
    }
    var /= static_cast<double>(n);
    double istd = 1.0 / std::sqrt(var + eps);
    Tensor out = x.value();
    for (std::int64_t i = 0; i < n; ++i) out[i] = gamma.value()[i] * (out[i] - mu) * istd + beta.value()[i];
    return make_op(std::move(out), {x, gamma, beta}, [n, mu, istd](Node& self) {
        Node* px = self.parents[0].get();
        Node* pg = self.parents[1].get();
        Node* pbt = self.parents[2].get();
        double inv_n = 1.0 / static_cast<double>(n);
        double s1 = 0.0, s2 = 0.0;  // sums of gamma*g and gamma*g*xhat
        for (std::int64_t i = 0; i < n; ++i) {
            double xh = (px->value[i] - mu) * istd;
            double gg = self.grad[i] * pg->value[i];
            s1 += gg;
            s2 += gg * xh;
            if (pg->requires_grad) pg->grad[i] += self.grad[i] * xh;
            if (pbt->requires_grad) pbt->grad[i] += self.grad[i];
        }
        if (px->requires_grad) {
            for (std::int64_t i = 0; i < n; ++i) {
                double xh = (px->value[i] - mu) * istd;
                double gg = self.grad[i] * pg->value[i];
                px->grad[i] += istd * (gg - s1 * inv_n - xh * s2 * inv_n);
            }
        }
    });
}

Var upsample_nearest2(const Var& x) {
    check_rank3(x, "upsample_nearest2");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx) out.at(ch, y, xx) = x.value().at(ch, y / 2, xx / 2);
    return make_op(std::move(out), {x}, [c, h, w](Node& self) {
        Node* p = self.parents[0].get();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx) p->grad.at(ch, y / 2, xx / 2) += self.grad.at(ch, y, xx);
    });
}

Var avgpool2(const Var& x) {
    check_rank3(x, "avgpool2");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    int oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) throw std::invalid_argument("avgpool2: input smaller than 2x2");
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx)
                out.at(ch, y, xx) = 0.25 * (x.value().at(ch, 2 * y, 2 * xx) + x.value().at(ch, 2 * y, 2 * xx + 1) +
                                            x.value().at(ch, 2 * y + 1, 2 * xx) + x.value().at(ch, 2 * y + 1, 2 * xx + 1));
    return make_op(std::move(out), {x}, [c, oh, ow](Node& self) {
        Node* p = self.parents[0].get();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    double g = 0.25 * self.grad.at(ch, y, xx);
                    p->grad.at(ch, 2 * y, 2 * xx) += g;
                    p->grad.at(ch, 2 * y, 2 * xx + 1) += g;
                    p->grad.at(ch, 2 * y + 1, 2 * xx) += g;
                    p->grad.at(ch, 2 * y + 1, 2 * xx + 1) += g;
                }
    });
}

Var maxpool2(const Var& x) {
    check_rank3(x, "maxpool2");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    int oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) throw std::invalid_argument("maxpool2: input smaller than 2x2");
    Tensor out({c, oh, ow});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<size_t>(c) * oh * ow);
    std::int64_t k = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx, ++k) {
                double best = -1e308;
                std::int64_t bi = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        std::int64_t idx = (static_cast<std::int64_t>(ch) * h + 2 * y + dy) * w + 2 * xx + dx;
                        if (x.value()[idx] > best) {
                            best = x.value()[idx];
                            bi = idx;
                        }
                    }
                out[k] = best;
                (*argmax)[static_cast<size_t>(k)] = bi;
            }
    return make_op(std::move(out), {x}, [argmax](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) p->grad[(*argmax)[static_cast<size_t>(i)]] += self.grad[i];
    });
}

Var concat_channels(const Var& a, const Var& b) {
    check_rank3(a, "concat_channels");
    check_rank3(b, "concat_channels");
    int ca = a.value().dim(0), cb = b.value().dim(0);
    int h = a.value().dim(1), w = a.value().dim(2);
    if (b.value().dim(1) != h || b.value().dim(2) != w)
        throw std::invalid_argument("concat_channels: spatial dims differ");
    Tensor out({ca + cb, h, w});
    std::int64_t na = a.value().numel();
    for (std::int64_t i = 0; i < na; ++i) out[i] = a.value()[i];
    for (std::int64_t i = 0; i < b.value().numel(); ++i) out[na + i] = b.value()[i];
    return make_op(std::move(out), {a, b}, [na](Node& self) {
        Node* pa = self.parents[0].get();
        Node* pb = self.parents[1].get();
        if (pa->requires_grad)
            for (std::int64_t i = 0; i < na; ++i) pa->grad[i] += self.grad[i];
        if (pb->requires_grad)
            for (std::int64_t i = 0; i < pb->grad.numel(); ++i) pb->grad[i] += self.grad[na + i];
    });
}

Var crop(const Var& x, int y0, int x0, int h, int w) {
    check_rank3(x, "crop");
    int c = x.value().dim(0), ih = x.value().dim(1), iw = x.value().dim(2);
    if (y0 < 0 || x0 < 0 || y0 + h > ih || x0 + w > iw) throw std::out_of_range("crop: region out of bounds");
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(ch, y, xx) = x.value().at(ch, y0 + y, x0 + xx);
    return make_op(std::move(out), {x}, [c, h, w, y0, x0](Node& self) {
        Node* p = self.parents[0].get();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) p->grad.at(ch, y0 + y, x0 + xx) += self.grad.at(ch, y, xx);
    });
}

Var pad_replicate(const Var& x, int top, int bottom, int left, int right) {
    check_rank3(x, "pad_replicate");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    int oh = h + top + bottom, ow = w + left + right;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y) {
            int sy = std::clamp(y - top, 0, h - 1);
            for (int xx = 0; xx < ow; ++xx) out.at(ch, y, xx) = x.value().at(ch, sy, std::clamp(xx - left, 0, w - 1));
        }
    return make_op(std::move(out), {x}, [c, h, w, top, left, oh, ow](Node& self) {
        Node* p = self.parents[0].get();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < oh; ++y) {
                int sy = std::clamp(y - top, 0, h - 1);
                for (int xx = 0; xx < ow; ++xx)
                    p->grad.at(ch, sy, std::clamp(xx - left, 0, w - 1)) += self.grad.at(ch, y, xx);
            }
    });
}

Var flatten(const Var& x) {
    Tensor out({static_cast<int>(x.value().numel())});
    for (std::int64_t i = 0; i < x.value().numel(); ++i) out[i] = x.value()[i];
    return make_op(std::move(out), {x}, [](Node& self) {
        Node* p = self.parents[0].get();
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) p->grad[i] += self.grad[i];
    });
}

namespace {
struct BilinearTap {
    int y0, y1, x0, x1;
    double fy, fx;
};

BilinearTap tap_at(double sy, double sx, int h, int w) {
    sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
    sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
    BilinearTap t;
    t.y0 = static_cast<int>(std::floor(sy));
    t.x0 = static_cast<int>(std::floor(sx));
    t.y1 = std::min(t.y0 + 1, h - 1);
    t.x1 = std::min(t.x0 + 1, w - 1);
    t.fy = sy - t.y0;
    t.fx = sx - t.x0;
    return t;
}

double sample_tap(const Tensor& img, int c, const BilinearTap& t) {
    double v00 = img.at(c, t.y0, t.x0), v01 = img.at(c, t.y0, t.x1);
    double v10 = img.at(c, t.y1, t.x0), v11 = img.at(c, t.y1, t.x1);
    return (1.0 - t.fy) * ((1.0 - t.fx) * v00 + t.fx * v01) + t.fy * ((1.0 - t.fx) * v10 + t.fx * v11);
}

void scatter_tap(Tensor& grad, int c, const BilinearTap& t, double g) {
    grad.at(c, t.y0, t.x0) += g * (1.0 - t.fy) * (1.0 - t.fx);
    grad.at(c, t.y0, t.x1) += g * (1.0 - t.fy) * t.fx;
    grad.at(c, t.y1, t.x0) += g * t.fy * (1.0 - t.fx);
    grad.at(c, t.y1, t.x1) += g * t.fy * t.fx;
}
}  // namespace

Var resize_bilinear(const Var& x, int out_h, int out_w) {
    check_rank3(x, "resize_bilinear");
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: bad target size");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    double sy = static_cast<double>(h) / out_h, sx = static_cast<double>(w) / out_w;
    Tensor out({c, out_h, out_w});
    for (int y = 0; y < out_h; ++y)
        for (int xx = 0; xx < out_w; ++xx) {
            BilinearTap t = tap_at((y + 0.5) * sy - 0.5, (xx + 0.5) * sx - 0.5, h, w);
            for (int ch = 0; ch < c; ++ch) out.at(ch, y, xx) = sample_tap(x.value(), ch, t);
        }
    return make_op(std::move(out), {x}, [c, h, w, out_h, out_w, sy, sx](Node& self) {
        Node* p = self.parents[0].get();
        for (int y = 0; y < out_h; ++y)
            for (int xx = 0; xx < out_w; ++xx) {
                BilinearTap t = tap_at((y + 0.5) * sy - 0.5, (xx + 0.5) * sx - 0.5, h, w);
                for (int ch = 0; ch < c; ++ch) scatter_tap(p->grad, ch, t, self.grad.at(ch, y, xx));
            }
    });
}

Var mask_channels(const Var& x, const Tensor& mask) {
    check_rank3(x, "mask_channels");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    if (mask.rank() != 2 || mask.dim(0) != h || mask.dim(1) != w)
        throw std::invalid_argument("mask_channels: mask shape must match image (H,W)");
    Tensor out({c, h, w});
    auto m = std::make_shared<Tensor>(mask);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(ch, y, xx) = x.value().at(ch, y, xx) * m->at(y, xx);
    return make_op(std::move(out), {x}, [c, h, w, m](Node& self) {
        Node* p = self.parents[0].get();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) p->grad.at(ch, y, xx) += self.grad.at(ch, y, xx) * m->at(y, xx);
    });
}

Var warp_perspective(const Var& x, const std::array<double, 9>& hm) {
    check_rank3(x, "warp_perspective");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    Tensor out({c, h, w});
    auto coord = [hm](int y, int xx, double& sy, double& sx) {
        double u = hm[0] * xx + hm[1] * y + hm[2];
        double v = hm[3] * xx + hm[4] * y + hm[5];
        double z = hm[6] * xx + hm[7] * y + hm[8];
        if (!std::isfinite(z) || std::abs(z) < 1e-12) {
            sx = 0.0;
            sy = 0.0;
            return;
        }
        sx = u / z;
        sy = v / z;
        if (!std::isfinite(sx)) sx = 0.0;
        if (!std::isfinite(sy)) sy = 0.0;
    };
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
            double sy, sx;
            coord(y, xx, sy, sx);
            BilinearTap t = tap_at(sy, sx, h, w);
            for (int ch = 0; ch < c; ++ch) out.at(ch, y, xx) = sample_tap(x.value(), ch, t);
        }
    return make_op(std::move(out), {x}, [c, h, w, coord](Node& self) {
        Node* p = self.parents[0].get();
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double sy, sx;
                coord(y, xx, sy, sx);
                BilinearTap t = tap_at(sy, sx, h, w);
                for (int ch = 0; ch < c; ++ch) scatter_tap(p->grad, ch, t, self.grad.at(ch, y, xx));
            }
    });
}

Var tv_mean_sq(const Var& x) {
    check_rank3(x, "tv_mean_sq");
    int c = x.value().dim(0), h = x.value().dim(1), w = x.value().dim(2);
    std::int64_t mh = static_cast<std::int64_t>(c) * h * (w - 1);
    std::int64_t mv = static_cast<std::int64_t>(c) * (h - 1) * w;
    double sh = 0.0, sv = 0.0;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                double v = x.value().at(ch, y, xx);
                if (xx + 1 < w) {
                    double d = x.value().at(ch, y, xx + 1) - v;
                    sh += d * d;
                }
                if (y + 1 < h) {
                    double d = x.value().at(ch, y + 1, xx) - v;
                    sv += d * d;
                }
            }
    double total = (mh > 0 ? sh / static_cast<double>(mh) : 0.0) + (mv > 0 ? sv / static_cast<double>(mv) : 0.0);
    return make_op(Tensor::scalar(total), {x}, [c, h, w, mh, mv](Node& self) {
        Node* p = self.parents[0].get();
        double g = self.grad[0];
        double ih = mh > 0 ? 2.0 * g / static_cast<double>(mh) : 0.0;
        double iv = mv > 0 ? 2.0 * g / static_cast<double>(mv) : 0.0;
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    double v = p->value.at(ch, y, xx);
                    if (xx + 1 < w) {
                        double d = (p->value.at(ch, y, xx + 1) - v) * ih;
                        p->grad.at(ch, y, xx + 1) += d;
                        p->grad.at(ch, y, xx) -= d;
                    }
                    if (y + 1 < h) {
                        double d = (p->value.at(ch, y + 1, xx) - v) * iv;
                        p->grad.at(ch, y + 1, xx) += d;
                        p->grad.at(ch, y, xx) -= d;
                    }
                }
    });
}

std::array<double, 9> homography_from_points(const std::array<std::array<double, 2>, 4>& src,
                                             const std::array<std::array<double, 2>, 4>& dst) {
    // Rows of A h = b for h = (h0..h7), h8 = 1.
    double a[8][9] = {};
    for (int i = 0; i < 4; ++i) {
        double sx = src[static_cast<size_t>(i)][0], sy = src[static_cast<size_t>(i)][1];
        double dx = dst[static_cast<size_t>(i)][0], dy = dst[static_cast<size_t>(i)][1];
        double* r0 = a[2 * i];
        double* r1 = a[2 * i + 1];
        r0[0] = sx; r0[1] = sy; r0[2] = 1.0; r0[6] = -sx * dx; r0[7] = -sy * dx; r0[8] = dx;
        r1[3] = sx; r1[4] = sy; r1[5] = 1.0; r1[6] = -sx * dy; r1[7] = -sy * dy; r1[8] = dy;
    }
    // Gaussian elimination with partial pivoting on the augmented 8x9 system.
    for (int col = 0; col < 8; ++col) {
        int piv = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) throw std::domain_error("homography_from_points: degenerate point set");
        if (piv != col)
            for (int k = 0; k < 9; ++k) std::swap(a[piv][k], a[col][k]);
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (int k = col; k < 9; ++k) a[r][k] -= f * a[col][k];
        }
    }
    std::array<double, 9> hmat;
    for (int i = 0; i < 8; ++i) hmat[static_cast<size_t>(i)] = a[i][8] / a[i][i];
    hmat[8] = 1.0;
    return hmat;
}

}  // namespace semstyle::ad
