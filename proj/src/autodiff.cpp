#include "reinflect/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reinflect/errors.hpp"

namespace reinflect {

const Tensor& Expr::value() const { return graph_->value(id_); }

const Tensor& Expr::grad() const { return graph_->grad(id_); }

Expr Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Expr(this, nodes_.size() - 1);
}

Expr Graph::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Expr Graph::variable(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = track_gradients_;
  return push(std::move(n));
}

Expr Graph::parameter(const Tensor& value) {
  Node n;
  n.external = &value;
  n.requires_grad = track_gradients_;
  return push(std::move(n));
}

Expr Graph::record(Tensor value, std::span<const Expr> parents, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (const Expr& p : parents) {
    if (p.graph_ != this) throw InputError("operand belongs to a different graph");
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Graph::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

Tensor& Graph::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Expr root) {
  if (root.graph_ != this) throw InputError("backward root belongs to a different graph");
  if (value(root.id_).size() != 1) {
    throw DimensionError("backward root must be scalar, got shape " +
                         shape_string(value(root.id_).shape()));
  }
  if (backward_done_) throw InputError("backward already ran on this graph");
  backward_done_ = true;

  grad_ref(root.id_).fill(1.0);
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
  }
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <typename F>
Expr unary(Expr x, F&& f, Graph::BackwardFn backward) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  auto src = xv.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  const Expr parents[] = {x};
  return x.graph().record(std::move(out), parents, std::move(backward));
}

}  // namespace

Expr matmul(Expr a, Expr b) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() < 1 || av.rank() > 2 || bv.rank() < 1 || bv.rank() > 2 ||
      (av.rank() == 1 && bv.rank() == 1)) {
    throw DimensionError("matmul: unsupported operand ranks " + shape_string(av.shape()) + " · " +
                         shape_string(bv.shape()));
  }
  // A rank-1 right operand is a column vector.
  const std::size_t m = av.rank() == 2 ? av.shape()[0] : 1;
  const std::size_t k = av.rank() == 2 ? av.shape()[1] : av.shape()[0];
  const std::size_t kb = bv.shape()[0];
  const std::size_t n = bv.rank() == 2 ? bv.shape()[1] : 1;
  if (k != kb) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(av.shape()) + " · " +
                         shape_string(bv.shape()));
  }

  Tensor::Shape shape;
  if (av.rank() == 2) shape.push_back(m);
  if (bv.rank() == 2) shape.push_back(n);
  Tensor out(shape);

  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* C = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* c_row = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = A[i * k + p];
      const double* b_row = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }

  const Expr parents[] = {a, b};
  return g.record(std::move(out), parents,
                  [ia = a.id(), ib = b.id(), m, k, n](Graph& g, std::size_t self) {
                    const double* G = g.grad(self).data().data();
                    if (g.requires_grad(ia)) {
                      const double* Bv = g.value(ib).data().data();
                      double* dA = g.grad_ref(ia).data().data();
                      // dA = G · Bᵀ
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          const double* b_row = Bv + p * n;
                          const double* g_row = G + i * n;
                          double acc = 0.0;
                          for (std::size_t j = 0; j < n; ++j) acc += g_row[j] * b_row[j];
                          dA[i * k + p] += acc;
                        }
                      }
                    }
                    if (g.requires_grad(ib)) {
                      const double* Av = g.value(ia).data().data();
                      double* dB = g.grad_ref(ib).data().data();
                      // dB = Aᵀ · G
                      for (std::size_t i = 0; i < m; ++i) {
                        const double* g_row = G + i * n;
                        for (std::size_t p = 0; p < k; ++p) {
                          const double a_ip = Av[i * k + p];
                          double* db_row = dB + p * n;
                          for (std::size_t j = 0; j < n; ++j) db_row[j] += a_ip * g_row[j];
                        }
                      }
                    }
                  });
}

Expr add(Expr a, Expr b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  const Expr parents[] = {a, b};
  return a.graph().record(std::move(out), parents,
                          [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                            auto gd = g.grad(self).data();
                            for (std::size_t id : {ia, ib}) {
                              if (!g.requires_grad(id)) continue;
                              auto d = g.grad_ref(id).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i];
                            }
                          });
}

Expr sub(Expr a, Expr b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  const Expr parents[] = {a, b};
  return a.graph().record(std::move(out), parents,
                          [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                            auto gd = g.grad(self).data();
                            if (g.requires_grad(ia)) {
                              auto d = g.grad_ref(ia).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i];
                            }
                            if (g.requires_grad(ib)) {
                              auto d = g.grad_ref(ib).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] -= gd[i];
                            }
                          });
}

Expr mul(Expr a, Expr b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  const Expr parents[] = {a, b};
  return a.graph().record(std::move(out), parents,
                          [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                            auto gd = g.grad(self).data();
                            if (g.requires_grad(ia)) {
                              auto bv = g.value(ib).data();
                              auto d = g.grad_ref(ia).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * bv[i];
                            }
                            if (g.requires_grad(ib)) {
                              auto av = g.value(ia).data();
                              auto d = g.grad_ref(ib).data();
                              for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * av[i];
                            }
                          });
}

Expr tanh(Expr x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [ix = x.id()](Graph& g, std::size_t self) {
        if (!g.requires_grad(ix)) return;
        auto y = g.value(self).data();
        auto gd = g.grad(self).data();
        auto d = g.grad_ref(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * (1.0 - y[i] * y[i]);
      });
}

Expr sigmoid(Expr x) {
  return unary(
      x,
      [](double v) {
        // Branch keeps exp() argument nonpositive.
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [ix = x.id()](Graph& g, std::size_t self) {
        if (!g.requires_grad(ix)) return;
        auto y = g.value(self).data();
        auto gd = g.grad(self).data();
        auto d = g.grad_ref(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i] * y[i] * (1.0 - y[i]);
      });
}

Expr one_minus(Expr x) {
  return unary(
      x, [](double v) { return 1.0 - v; },
      [ix = x.id()](Graph& g, std::size_t self) {
        if (!g.requires_grad(ix)) return;
        auto gd = g.grad(self).data();
        auto d = g.grad_ref(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= gd[i];
      });
}

Expr add_n(std::span<const Expr> terms) {
  if (terms.empty()) throw InputError("add_n: no operands");
  Tensor out = terms[0].value();
  auto od = out.data();
  std::vector<std::size_t> ids{terms[0].id()};
  for (std::size_t t = 1; t < terms.size(); ++t) {
    require_same_shape("add_n", out, terms[t].value());
    auto td = terms[t].value().data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] += td[i];
    ids.push_back(terms[t].id());
  }
  return terms[0].graph().record(std::move(out), terms,
                                 [ids = std::move(ids)](Graph& g, std::size_t self) {
                                   auto gd = g.grad(self).data();
                                   for (std::size_t id : ids) {
                                     if (!g.requires_grad(id)) continue;
                                     auto d = g.grad_ref(id).data();
                                     for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i];
                                   }
                                 });
}

Expr softmax(Expr x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 1) throw DimensionError("softmax: expected a vector, got " + shape_string(xv.shape()));
  if (xv.empty()) throw DimensionError("softmax: empty input");
  auto xd = xv.data();
  const double mx = *std::max_element(xd.begin(), xd.end());
  Tensor out(xv.shape());
  auto od = out.data();
  double z = 0.0;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    od[i] = std::exp(xd[i] - mx);
    z += od[i];
  }
  for (double& v : od) v /= z;
  const Expr parents[] = {x};
  return x.graph().record(std::move(out), parents, [ix = x.id()](Graph& g, std::size_t self) {
    if (!g.requires_grad(ix)) return;
    auto y = g.value(self).data();
    auto gd = g.grad(self).data();
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += gd[i] * y[i];
    auto d = g.grad_ref(ix).data();
    for (std::size_t i = 0; i < y.size(); ++i) d[i] += y[i] * (gd[i] - dot);
  });
}

Expr neg_log_softmax(Expr logits, std::size_t index) {
  const Tensor& xv = logits.value();
  if (xv.rank() != 1 || xv.empty()) {
    throw DimensionError("neg_log_softmax: expected a nonempty vector, got " + shape_string(xv.shape()));
  }
  if (index >= xv.size()) {
    throw VocabularyError("neg_log_softmax: index " + std::to_string(index) + " out of range for " +
                          std::to_string(xv.size()) + " classes");
  }
  auto xd = xv.data();
  const double mx = *std::max_element(xd.begin(), xd.end());
  double z = 0.0;
  for (double v : xd) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  const Expr parents[] = {logits};
  return logits.graph().record(
      Tensor::scalar(lse - xd[index]), parents,
      [ix = logits.id(), index, lse](Graph& g, std::size_t self) {
        if (!g.requires_grad(ix)) return;
        const double gs = g.grad(self).item();
        auto x = g.value(ix).data();
        auto d = g.grad_ref(ix).data();
        for (std::size_t i = 0; i < x.size(); ++i) d[i] += gs * std::exp(x[i] - lse);
        d[index] -= gs;
      });
}

Expr concat(Expr a, Expr b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != bv.rank() || av.rank() < 1 || av.rank() > 2 ||
      (av.rank() == 2 && av.shape()[0] != bv.shape()[0])) {
    throw DimensionError("concat: incompatible shapes " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t rows = av.rows();
  const std::size_t ca = av.rank() == 2 ? av.shape()[1] : av.shape()[0];
  const std::size_t cb = bv.rank() == 2 ? bv.shape()[1] : bv.shape()[0];
  Tensor::Shape shape = av.rank() == 2 ? Tensor::Shape{rows, ca + cb} : Tensor::Shape{ca + cb};
  Tensor out(shape);
  auto ad = av.data();
  auto bd = bv.data();
  auto od = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(ad.begin() + r * ca, ca, od.begin() + r * (ca + cb));
    std::copy_n(bd.begin() + r * cb, cb, od.begin() + r * (ca + cb) + ca);
  }
  const Expr parents[] = {a, b};
  return a.graph().record(std::move(out), parents,
                          [ia = a.id(), ib = b.id(), rows, ca, cb](Graph& g, std::size_t self) {
                            auto gd = g.grad(self).data();
                            if (g.requires_grad(ia)) {
                              auto d = g.grad_ref(ia).data();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t j = 0; j < ca; ++j) d[r * ca + j] += gd[r * (ca + cb) + j];
                            }
                            if (g.requires_grad(ib)) {
                              auto d = g.grad_ref(ib).data();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t j = 0; j < cb; ++j)
                                  d[r * cb + j] += gd[r * (ca + cb) + ca + j];
                            }
                          });
}

Expr lookup(Expr table, std::size_t id) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("lookup: table must be a matrix, got " + shape_string(tv.shape()));
  if (id >= tv.shape()[0]) {
    throw VocabularyError("lookup: id " + std::to_string(id) + " out of range for table with " +
                          std::to_string(tv.shape()[0]) + " rows");
  }
  auto row = tv.row(id);
  Tensor out(Tensor::Shape{row.size()}, std::vector<double>(row.begin(), row.end()));
  const Expr parents[] = {table};
  return table.graph().record(std::move(out), parents, [it = table.id(), id](Graph& g, std::size_t self) {
    if (!g.requires_grad(it)) return;
    auto gd = g.grad(self).data();
    auto d = g.grad_ref(it).row(id);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += gd[j];
  });
}

Expr stack_rows(std::span<const Expr> rows) {
  if (rows.empty()) throw InputError("stack_rows: no rows");
  const Tensor& first = rows[0].value();
  if (first.rank() != 1) throw DimensionError("stack_rows: rows must be vectors, got " + shape_string(first.shape()));
  const std::size_t n = first.size();
  Tensor out(Tensor::Shape{rows.size(), n});
  std::vector<std::size_t> ids;
  ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_same_shape("stack_rows", first, rows[r].value());
    auto src = rows[r].value().data();
    std::copy(src.begin(), src.end(), out.row(r).begin());
    ids.push_back(rows[r].id());
  }
  return rows[0].graph().record(std::move(out), rows, [ids = std::move(ids)](Graph& g, std::size_t self) {
    const Tensor& gm = g.grad(self);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!g.requires_grad(ids[r])) continue;
      auto src = gm.row(r);
      auto d = g.grad_ref(ids[r]).data();
      for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[j];
    }
  });
}

Expr add_row_broadcast(Expr matrix, Expr row) {
  const Tensor& mv = matrix.value();
  const Tensor& rv = row.value();
  if (mv.rank() != 2 || rv.rank() != 1 || mv.shape()[1] != rv.size()) {
    throw DimensionError("add_row_broadcast: incompatible shapes " + shape_string(mv.shape()) + " and " +
                         shape_string(rv.shape()));
  }
  Tensor out = mv;
  auto rd = rv.data();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += rd[j];
  }
  const Expr parents[] = {matrix, row};
  return matrix.graph().record(std::move(out), parents,
                               [im = matrix.id(), ir = row.id()](Graph& g, std::size_t self) {
                                 const Tensor& gm = g.grad(self);
                                 if (g.requires_grad(im)) {
                                   auto d = g.grad_ref(im).data();
                                   auto gd = gm.data();
                                   for (std::size_t i = 0; i < d.size(); ++i) d[i] += gd[i];
                                 }
                                 if (g.requires_grad(ir)) {
                                   auto d = g.grad_ref(ir).data();
                                   for (std::size_t r = 0; r < gm.rows(); ++r) {
                                     auto src = gm.row(r);
                                     for (std::size_t j = 0; j < d.size(); ++j) d[j] += src[j];
                                   }
                                 }
                               });
}

Expr sum(Expr x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const Expr parents[] = {x};
  return x.graph().record(Tensor::scalar(total), parents, [ix = x.id()](Graph& g, std::size_t self) {
    if (!g.requires_grad(ix)) return;
    const double gs = g.grad(self).item();
    for (double& d : g.grad_ref(ix).data()) d += gs;
  });
}

}  // namespace reinflect
