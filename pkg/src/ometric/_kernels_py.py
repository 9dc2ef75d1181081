"""Pure-Python kernels.  Same contract as the compiled ``_kernels`` module.

Trees arrive as postfix programs: a non-negative entry pushes ``values[k]``,
``-1`` pops two operands and pushes ``ω(left, right)``.

Built-in ω kinds (anything else is evaluated by the caller in Python):

* ``KIND_AFFINE``  ω(u, v) = p·u + q·v
* ``KIND_MAX``     ω(u, v) = max(u, v)
* ``KIND_POWPROD`` ω(u, v) = (u·v)^p
"""

import math

KIND_AFFINE = 0
KIND_MAX = 1
KIND_POWPROD = 2

_INF = math.inf


def _combine(kind, p, q, u, v):
    if kind == KIND_AFFINE:
        return p * u + q * v
    if kind == KIND_MAX:
        return u if u >= v else v
    if kind == KIND_POWPROD:
        try:
            return (u * v) ** p
        except OverflowError:
            return _INF
    raise ValueError(f"unknown kernel kind {kind}")


def _check_kind(kind):
    if kind not in (KIND_AFFINE, KIND_MAX, KIND_POWPROD):
        raise ValueError(f"unknown kernel kind {kind}")


def _outside(x, lo, hi, lo_closed, hi_closed, slack):
    if x != x:
        return True
    if lo_closed:
        if x < lo - slack:
            return True
    elif x <= lo - slack:
        return True
    if hi_closed:
        if x > hi + slack:
            return True
    elif x >= hi + slack:
        return True
    return False


def eval_postfix(prog, values, kind, p, q, lo=0.0, hi=_INF, lo_closed=True,
                 hi_closed=False, check=False, slack=0.0):
    """Evaluate one program.  Returns ``(value, fail_pos)``; ``fail_pos`` is the
    index in ``prog`` whose result left ``[lo, hi]`` (``-1`` when none did)."""
    _check_kind(kind)
    stack = []
    push = stack.append
    pop = stack.pop
    for pos, op in enumerate(prog):
        if op >= 0:
            x = values[op]
        else:
            v = pop()
            u = pop()
            x = _combine(kind, p, q, u, v)
        if check and _outside(x, lo, hi, lo_closed, hi_closed, slack):
            return x, pos
        push(x)
    return stack[-1], -1


def eval_postfix_many(progs, values, kind, p, q):
    """Evaluate each row of a 2-D program array on the same values."""
    _check_kind(kind)
    return [eval_postfix(list(row), values, kind, p, q)[0] for row in progs]


def eval_windows(prog, terms, start, count, kind, p, q):
    """Evaluate ``prog`` on ``terms[start + k:]`` for ``k in range(count)``.

    Leaf ``j`` of window ``k`` reads ``terms[start + k + j]``.
    """
    _check_kind(kind)
    prog = list(prog)
    terms = list(terms)
    out = []
    for k in range(count):
        base = start + k
        stack = []
        for op in prog:
            if op >= 0:
                stack.append(terms[base + op])
            else:
                v = stack.pop()
                u = stack.pop()
                stack.append(_combine(kind, p, q, u, v))
        out.append(stack[-1])
    return out


def lifo_sum(s, terms):
    """sum_{i=1}^{n} s^i t_{i-1} + s^n t_n."""
    n = len(terms) - 1
    total = 0.0
    w = 1.0
    for i in range(1, n + 1):
        w *= s
        total += w * terms[i - 1]
    return total + w * terms[n]


def fifo_sum(s, terms):
    """s^n t_0 + sum_{i=1}^{n} s^i t_{n-i+1}."""
    n = len(terms) - 1
    total = 0.0
    w = 1.0
    for i in range(1, n + 1):
        w *= s
        total += w * terms[n - i + 1]
    return w * terms[0] + total


def binary_split_seq(n):
    """Return ``(n_seq, l_seq)`` with ``n_seq = (n_0, ..., n_{N+1})`` and
    ``l_seq = (l_0, ..., l_{N-1})``; the trailing ``l_N`` is always 0."""
    n_seq = [0]
    l_seq = []
    nj = 0
    while n - nj >= 2:
        lj = (n - nj - 1).bit_length()
        l_seq.append(lj)
        nj += 1 << (lj - 1)
        n_seq.append(nj)
    n_seq.append(n)
    return n_seq, l_seq


def pow2_exact_sum(s, terms):
    """sum_{r=0}^{N} s^{r + l_r} sum_{i=n_r+1}^{n_{r+1}} t_i  (terms are t_1..t_n)."""
    n = len(terms)
    n_seq, l_seq = binary_split_seq(n)
    total = 0.0
    for r in range(len(n_seq) - 1):
        lr = l_seq[r] if r < len(l_seq) else 0
        block = 0.0
        for i in range(n_seq[r], n_seq[r + 1]):
            block += terms[i]
        total += s ** (r + lr) * block
    return total


def binary_split_mask(n):
    """Return ``(mask, reconstructed)`` where ``mask`` has bit ``l_r - 1`` set for
    every split and bit 0 set for the trailing unit term."""
    n_seq, l_seq = binary_split_seq(n)
    mask = 1
    recon = 1
    for lr in l_seq:
        mask |= 1 << (lr - 1)
        recon += 1 << (lr - 1)
    return mask, recon
