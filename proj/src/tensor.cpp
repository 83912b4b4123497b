#include "jeda/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace jeda::ad {

namespace {

std::atomic<int64_t> g_next_id{1};

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                std::vector<std::shared_ptr<Node>> parents,
                                bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad = requires_grad;
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

bool any_requires(const std::vector<std::shared_ptr<Node>>& parents) {
    for (const auto& p : parents)
        if (p->requires_grad) return true;
    return false;
}

// Right-aligned broadcast bookkeeping for binary elementwise ops.
struct BcastPlan {
    Shape out_shape;
    std::vector<int64_t> out_dims;   // out extent per axis
    std::vector<int64_t> stride_a;   // element stride per out axis, 0 on broadcast axes
    std::vector<int64_t> stride_b;
    int64_t n = 0;
    bool same_shape = false;
};

BcastPlan broadcast_plan(const Shape& a, const Shape& b) {
    BcastPlan plan;
    if (a == b) {
        plan.out_shape = a;
        plan.n = shape_size(a);
        plan.same_shape = true;
        return plan;
    }
    size_t rank = std::max(a.size(), b.size());
    plan.out_shape.resize(rank);
    plan.out_dims.resize(rank);
    plan.stride_a.resize(rank);
    plan.stride_b.resize(rank);

    // Element strides of the (right-aligned) inputs.
    std::vector<int64_t> sa(rank, 0), sb(rank, 0), da(rank, 1), db(rank, 1);
    for (size_t i = 0; i < rank; ++i) {
        size_t ra = rank - 1 - i;
        da[ra] = i < a.size() ? a[a.size() - 1 - i] : 1;
        db[ra] = i < b.size() ? b[b.size() - 1 - i] : 1;
    }
    int64_t acc_a = 1, acc_b = 1;
    for (size_t i = rank; i-- > 0;) {
        sa[i] = acc_a;
        sb[i] = acc_b;
        acc_a *= da[i];
        acc_b *= db[i];
    }
    plan.n = 1;
    for (size_t i = 0; i < rank; ++i) {
        int64_t ea = da[i], eb = db[i];
        if (ea != eb && ea != 1 && eb != 1)
            throw ContractError("broadcast: incompatible shapes");
        int64_t e = std::max(ea, eb);
        plan.out_shape[i] = static_cast<int>(e);
        plan.out_dims[i] = e;
        plan.stride_a[i] = (ea == 1 && e != 1) ? 0 : sa[i];
        plan.stride_b[i] = (eb == 1 && e != 1) ? 0 : sb[i];
        plan.n *= e;
    }
    return plan;
}

// Walks the output linearly while tracking both input offsets.
template <typename Fn>
void bcast_for_each(const BcastPlan& plan, Fn&& fn) {
    size_t rank = plan.out_dims.size();
    std::vector<int64_t> idx(rank, 0);
    int64_t oa = 0, ob = 0;
    for (int64_t i = 0; i < plan.n; ++i) {
        fn(i, oa, ob);
        for (size_t d = rank; d-- > 0;) {
            ++idx[d];
            oa += plan.stride_a[d];
            ob += plan.stride_b[d];
            if (idx[d] < plan.out_dims[d]) break;
            oa -= plan.stride_a[d] * plan.out_dims[d];
            ob -= plan.stride_b[d] * plan.out_dims[d];
            idx[d] = 0;
        }
    }
}

// fwd(a, b) -> out; bwd(a, b, gout, &ga, &gb) adds the two partials.
template <typename Fwd, typename Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
    BcastPlan plan = broadcast_plan(a.shape(), b.shape());
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    std::vector<double> out(static_cast<size_t>(plan.n));
    if (plan.same_shape) {
        for (int64_t i = 0; i < plan.n; ++i) out[i] = fwd(av[i], bv[i]);
    } else {
        bcast_for_each(plan, [&](int64_t i, int64_t oa, int64_t ob) {
            out[i] = fwd(av[oa], bv[ob]);
        });
    }
    std::vector<std::shared_ptr<Node>> parents{a.node(), b.node()};
    bool req = any_requires(parents);
    auto node = make_node(plan.out_shape, std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [plan, bwd](Node& self) {
            Node& na = *self.parents[0];
            Node& nb = *self.parents[1];
            bool ga = na.requires_grad, gb = nb.requires_grad;
            if (ga) na.ensure_grad();
            if (gb) nb.ensure_grad();
            double dummy = 0.0;
            if (plan.same_shape) {
                for (int64_t i = 0; i < plan.n; ++i) {
                    bwd(na.value[i], nb.value[i], self.grad[i],
                        ga ? na.grad[i] : dummy, gb ? nb.grad[i] : dummy);
                }
            } else {
                bcast_for_each(plan, [&](int64_t i, int64_t oa, int64_t ob) {
                    bwd(na.value[oa], nb.value[ob], self.grad[i],
                        ga ? na.grad[oa] : dummy, gb ? nb.grad[ob] : dummy);
                });
            }
        };
    }
    return Tensor(node);
}

// fwd(x) -> out; dfdx(x, out) -> local derivative.
template <typename Fwd, typename Dfdx>
Tensor unary_op(const Tensor& x, Fwd fwd, Dfdx dfdx) {
    const auto& xv = x.node()->value;
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    std::vector<std::shared_ptr<Node>> parents{x.node()};
    bool req = any_requires(parents);
    auto node = make_node(x.shape(), std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [dfdx](Node& self) {
            Node& nx = *self.parents[0];
            nx.ensure_grad();
            for (size_t i = 0; i < self.value.size(); ++i)
                nx.grad[i] += self.grad[i] * dfdx(nx.value[i], self.value[i]);
        };
    }
    return Tensor(node);
}

void mm(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<size_t>(i) * n;
        const double* arow = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            double av = arow[p];
            const double* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// dA[m x k] += G[m x n] * B^T, B stored [k x n]
void mm_acc_bt(const double* g, const double* b, double* da, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* grow = g + static_cast<size_t>(i) * n;
        double* darow = da + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double* brow = b + static_cast<size_t>(p) * n;
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
            darow[p] += s;
        }
    }
}

// dB[k x n] += A^T * G, A stored [m x k]
void mm_acc_at(const double* a, const double* g, double* db, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        const double* grow = g + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            double* dbrow = db + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) dbrow[j] += av * grow[j];
        }
    }
}

}  // namespace

int64_t shape_size(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ContractError("shape: dimensions must be positive");
        n *= d;
    }
    return n;
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    if (shape_size(shape) != static_cast<int64_t>(values.size()))
        throw ContractError("tensor: shape does not match value count");
    auto n = make_node(std::move(shape), std::move(values), {}, true);
    return Tensor(n);
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (shape_size(shape) != static_cast<int64_t>(values.size()))
        throw ContractError("tensor: shape does not match value count");
    auto n = make_node(std::move(shape), std::move(values), {}, false);
    return Tensor(n);
}

Tensor Tensor::zeros(Shape shape) {
    int64_t n = shape_size(shape);
    return constant(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
}

std::span<const double> Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item: tensor is not a scalar");
    return node_->value[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2)
        throw ContractError("matmul: both operands must be 2-D");
    if (sa[1] != sb[0]) throw ContractError("matmul: inner dimensions disagree");
    int m = sa[0], k = sa[1], n = sb[1];
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    mm(a.node()->value.data(), b.node()->value.data(), out.data(), m, k, n);
    std::vector<std::shared_ptr<Node>> parents{a.node(), b.node()};
    bool req = any_requires(parents);
    auto node = make_node({m, n}, std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [m, k, n](Node& self) {
            Node& na = *self.parents[0];
            Node& nb = *self.parents[1];
            if (na.requires_grad) {
                na.ensure_grad();
                mm_acc_bt(self.grad.data(), nb.value.data(), na.grad.data(), m, n, k);
            }
            if (nb.requires_grad) {
                nb.ensure_grad();
                mm_acc_at(na.value.data(), self.grad.data(), nb.grad.data(), m, k, n);
            }
        };
    }
    return Tensor(node);
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x + y; },
        [](double, double, double g, double& ga, double& gb) {
            ga += g;
            gb += g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x - y; },
        [](double, double, double g, double& ga, double& gb) {
            ga += g;
            gb -= g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double g, double& ga, double& gb) {
            ga += g * y;
            gb += g * x;
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x / y; },
        [](double x, double y, double g, double& ga, double& gb) {
            ga += g / y;
            gb -= g * x / (y * y);
        });
}

Tensor max_pair(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x >= y ? x : y; },
        [](double x, double y, double g, double& ga, double& gb) {
            if (x >= y)
                ga += g;
            else
                gb += g;
        });
}

Tensor min_pair(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](double x, double y) { return x <= y ? x : y; },
        [](double x, double y, double g, double& ga, double& gb) {
            if (x <= y)
                ga += g;
            else
                gb += g;
        });
}

Tensor neg(const Tensor& x) {
    return unary_op(
        x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    for (double v : x.values())
        if (!(v > 0.0)) throw ContractError("log: input must be strictly positive");
    return unary_op(
        x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor abs(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor sqrt(const Tensor& x) {
    return unary_op(
        x, [](double v) { return std::sqrt(v); },
        [](double, double y) { return 0.5 / y; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    return unary_op(
        x,
        [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
        [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& x, double c) {
    return unary_op(
        x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_op(
        x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor log_softmax(const Tensor& scores) {
    const Shape& s = scores.shape();
    if (s.size() != 2) throw ContractError("log_softmax: expected [batch x classes]");
    int b = s[0], c = s[1];
    const auto& xv = scores.node()->value;
    std::vector<double> out(xv.size());
    for (int i = 0; i < b; ++i) {
        const double* row = xv.data() + static_cast<size_t>(i) * c;
        double* orow = out.data() + static_cast<size_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < c; ++j) orow[j] = row[j] - lse;
    }
    std::vector<std::shared_ptr<Node>> parents{scores.node()};
    bool req = any_requires(parents);
    auto node = make_node({b, c}, std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [b, c](Node& self) {
            Node& nx = *self.parents[0];
            nx.ensure_grad();
            for (int i = 0; i < b; ++i) {
                const double* g = self.grad.data() + static_cast<size_t>(i) * c;
                const double* y = self.value.data() + static_cast<size_t>(i) * c;
                double* gx = nx.grad.data() + static_cast<size_t>(i) * c;
                double gsum = 0.0;
                for (int j = 0; j < c; ++j) gsum += g[j];
                for (int j = 0; j < c; ++j) gx[j] += g[j] - std::exp(y[j]) * gsum;
            }
        };
    }
    return Tensor(node);
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    std::vector<std::shared_ptr<Node>> parents{x.node()};
    bool req = any_requires(parents);
    auto node = make_node({1}, {s}, std::move(parents), req);
    if (req) {
        node->backward_fn = [](Node& self) {
            Node& nx = *self.parents[0];
            nx.ensure_grad();
            double g = self.grad[0];
            for (double& gv : nx.grad) gv += g;
        };
    }
    return Tensor(node);
}

Tensor mean(const Tensor& x) {
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean_rows(const Tensor& x) {
    const Shape& s = x.shape();
    if (s.size() != 2) throw ContractError("mean_rows: expected [rows x cols]");
    int r = s[0], c = s[1];
    const auto& xv = x.node()->value;
    std::vector<double> out(static_cast<size_t>(c), 0.0);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[j] += xv[static_cast<size_t>(i) * c + j];
    double inv = 1.0 / r;
    for (double& v : out) v *= inv;
    std::vector<std::shared_ptr<Node>> parents{x.node()};
    bool req = any_requires(parents);
    auto node = make_node({c}, std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [r, c, inv](Node& self) {
            Node& nx = *self.parents[0];
            nx.ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    nx.grad[static_cast<size_t>(i) * c + j] += self.grad[j] * inv;
        };
    }
    return Tensor(node);
}

Tensor gather_cols(const Tensor& x, const std::vector<int>& idx) {
    const Shape& s = x.shape();
    if (s.size() != 2) throw ContractError("gather_cols: expected [batch x classes]");
    int b = s[0], c = s[1];
    if (static_cast<int>(idx.size()) != b)
        throw ContractError("gather_cols: index count does not match batch");
    const auto& xv = x.node()->value;
    std::vector<double> out(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        if (idx[i] < 0 || idx[i] >= c) throw ContractError("gather_cols: index out of range");
        out[i] = xv[static_cast<size_t>(i) * c + idx[i]];
    }
    std::vector<std::shared_ptr<Node>> parents{x.node()};
    bool req = any_requires(parents);
    auto node = make_node({b}, std::move(out), std::move(parents), req);
    if (req) {
        node->backward_fn = [idx, c](Node& self) {
            Node& nx = *self.parents[0];
            nx.ensure_grad();
            for (size_t i = 0; i < idx.size(); ++i)
                nx.grad[i * c + idx[i]] += self.grad[i];
        };
    }
    return Tensor(node);
}

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw ContractError("backward: loss must be a scalar");
    Node* root = loss.node().get();
    if (!root->requires_grad) return;  // nothing differentiable upstream

    // Post-order DFS, each node once, parents before children in `order`.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior gradients are per-call scratch; leaves accumulate.
    for (Node* n : order) {
        if (n->is_leaf())
            n->ensure_grad();
        else
            n->grad.assign(n->value.size(), 0.0);
    }
    root->ensure_grad();
    root->grad[0] += 1.0;

    for (size_t i = order.size(); i-- > 0;) {
        Node* n = order[i];
        if (n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace jeda::ad
