"""Pure-Python twin of ``_ckernels``.

Every arithmetic step happens in the same order as the compiled version,
so with IEEE doubles and the same libm both give identical results.
"""
import math

_LO = 5e-324
_HI = 1.0 - 2.0**-53


def sigmoid(x):
    if x >= 0.0:
        s = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        s = e / (1.0 + e)
    if s >= 1.0:
        return _HI
    if s <= 0.0:
        return _LO
    return s


def sgd_epoch(params, sizes, X, Y, order, lr):
    """One pass of per-sample SGD; updates ``params`` in place, returns mean loss."""
    sizes = [int(v) for v in sizes]
    n_layers = len(sizes) - 1
    k = sizes[-1]
    n = len(order)
    if n == 0:
        return 0.0
    if X.shape[1] != sizes[0]:
        raise ValueError("input width does not match first layer")
    if Y.shape[1] != k:
        raise ValueError("target width does not match last layer")

    p = params.tolist()
    xs = X.tolist()
    ys = Y.tolist()
    lr = float(lr)

    w_offsets = []
    off = 0
    for l in range(n_layers):
        w_offsets.append(off)
        off += sizes[l + 1] * sizes[l] + sizes[l + 1]

    loss_sum = 0.0
    for s in order.tolist():
        acts = [xs[s]]
        for l in range(n_layers):
            fan_in, fan_out, w_off = sizes[l], sizes[l + 1], w_offsets[l]
            a_prev = acts[-1]
            b_off = w_off + fan_out * fan_in
            out = []
            for j in range(fan_out):
                acc = 0.0
                row = w_off + j * fan_in
                for i in range(fan_in):
                    acc = acc + p[row + i] * a_prev[i]
                out.append(sigmoid(acc + p[b_off + j]))
            acts.append(out)

        o_vec, t_vec = acts[-1], ys[s]
        acc = 0.0
        for j in range(k):
            diff = o_vec[j] - t_vec[j]
            acc = acc + diff * diff
        loss_sum = loss_sum + acc / k

        delta = [(2.0 * (o - t) / k) * (o * (1.0 - o)) for o, t in zip(o_vec, t_vec)]

        for l in range(n_layers - 1, -1, -1):
            fan_in, fan_out, w_off = sizes[l], sizes[l + 1], w_offsets[l]
            a_prev = acts[l]
            b_off = w_off + fan_out * fan_in
            delta_prev = None
            if l > 0:
                delta_prev = []
                for i in range(fan_in):
                    acc = 0.0
                    for j in range(fan_out):
                        acc = acc + p[w_off + j * fan_in + i] * delta[j]
                    o = a_prev[i]
                    delta_prev.append(acc * (o * (1.0 - o)))
            for j in range(fan_out):
                d = delta[j]
                row = w_off + j * fan_in
                for i in range(fan_in):
                    p[row + i] = p[row + i] - lr * d * a_prev[i]
                p[b_off + j] = p[b_off + j] - lr * d
            delta = delta_prev

    params[:] = p
    return loss_sum / n
