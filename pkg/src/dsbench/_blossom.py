"""Exact maximum-weight matching on dense complete graphs.

Array-based primal-dual blossom algorithm (Galil's O(n^3) formulation),
compiled with numba when available.  Only the dense complete-graph case is
supported, which is all the matching-based statistics need.

State layout: vertices are ids 0..n-1, nontrivial blossoms n..2n-1.
``label`` values: 0 free, 1 S, 2 T (bit 4 marks breadcrumbs during path
scans).  ``labeledge[b] = (v, w)`` is the edge through which b received its
label, with v outside and w inside b; (-1, -1) means none.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, but keep a fallback
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _blossom_leaves(b, n, childs, nchilds, out):
    """Collect leaf vertices of blossom id b into out; return count."""
    if b < n:
        out[0] = b
        return 1
    cnt = 0
    stack = np.empty(2 * n, dtype=np.int64)
    sp = 0
    stack[sp] = b
    sp += 1
    while sp > 0:
        sp -= 1
        t = stack[sp]
        if t < n:
            out[cnt] = t
            cnt += 1
        else:
            for i in range(nchilds[t - n]):
                stack[sp] = childs[t - n, i]
                sp += 1
    return cnt


@njit(cache=True)
def _assign_label(w, t, v, n, label, labeledge, bestedge, inblossom,
                  blossombase, mate, childs, nchilds, queue, qn, leafbuf):
    """Label vertex w (and its top blossom) with t, coming from vertex v."""
    while True:
        b = inblossom[w]
        label[w] = t
        label[b] = t
        if v >= 0:
            labeledge[w, 0] = v
            labeledge[w, 1] = w
            labeledge[b, 0] = v
            labeledge[b, 1] = w
        else:
            labeledge[w, 0] = -1
            labeledge[w, 1] = -1
            labeledge[b, 0] = -1
            labeledge[b, 1] = -1
        bestedge[w, 0] = -1
        bestedge[b, 0] = -1
        if t == 1:
            cnt = _blossom_leaves(b, n, childs, nchilds, leafbuf)
            for i in range(cnt):
                queue[qn[0]] = leafbuf[i]
                qn[0] += 1
            return
        # t == 2: the base's mate becomes an S vertex; loop instead of recurse.
        base = blossombase[b]
        w = mate[base]
        v = base
        t = 1


@njit(cache=True)
def _scan_blossom(v, w, n, label, labeledge, inblossom, blossombase):
    """Trace back from v and w; return lowest common base vertex or -1."""
    path = np.empty(2 * n, dtype=np.int64)
    np_ = 0
    base = -1
    while v >= 0:
        b = inblossom[v]
        if label[b] & 4:
            base = blossombase[b]
            break
        path[np_] = b
        np_ += 1
        label[b] |= 4
        if labeledge[b, 0] < 0:
            v = -1
        else:
            v = labeledge[b, 0]
            b = inblossom[v]
            v = labeledge[b, 0]
        if w >= 0:
            v, w = w, v
    for i in range(np_):
        label[path[i]] &= ~4
    return base


@njit(cache=True)
def _mwm_dense(wt2, n):
    """Maximum-weight maximum-cardinality matching of the complete graph.

    wt2[i, j] must hold twice the edge weight.  Returns the mate array.
    """
    nb = 2 * n
    mate = np.full(n, -1, dtype=np.int64)
    label = np.zeros(nb, dtype=np.int64)
    labeledge = np.full((nb, 2), -1, dtype=np.int64)
    inblossom = np.arange(n, dtype=np.int64)
    blossomparent = np.full(nb, -1, dtype=np.int64)
    blossombase = np.full(nb, -1, dtype=np.int64)
    for v in range(n):
        blossombase[v] = v
    bestedge = np.full((nb, 2), -1, dtype=np.int64)
    maxweight = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and wt2[i, j] > maxweight * 2.0:
                maxweight = wt2[i, j] / 2.0
    dualvar = np.full(n, maxweight, dtype=np.float64)
    blossomdual = np.zeros(n, dtype=np.float64)
    allowedge = np.zeros((n, n), dtype=np.bool_)
    queue = np.empty(8 * n + 8, dtype=np.int64)
    qn = np.zeros(1, dtype=np.int64)
    childs = np.full((n, n + 2), -1, dtype=np.int64)
    nchilds = np.zeros(n, dtype=np.int64)
    endps = np.full((n, n + 2, 2), -1, dtype=np.int64)
    unused = np.empty(n, dtype=np.int64)
    for i in range(n):
        unused[i] = nb - 1 - i  # pop() yields n, n+1, ...
    nunused = n
    leafbuf = np.empty(n, dtype=np.int64)
    leafbuf2 = np.empty(n, dtype=np.int64)
    # Stacks for the iterative versions of the recursive procedures.
    augstack_b = np.empty(4 * n, dtype=np.int64)
    augstack_v = np.empty(4 * n, dtype=np.int64)
    expstack = np.empty(2 * n, dtype=np.int64)

    for _stage in range(n):
        label[:] = 0
        labeledge[:, :] = -1
        bestedge[:, :] = -1
        allowedge[:, :] = False
        qn[0] = 0
        for v in range(n):
            if mate[v] < 0 and label[inblossom[v]] == 0:
                _assign_label(v, 1, -1, n, label, labeledge, bestedge,
                              inblossom, blossombase, mate, childs, nchilds,
                              queue, qn, leafbuf)
        augmented = False
        while True:
            while qn[0] > 0 and not augmented:
                qn[0] -= 1
                v = queue[qn[0]]
                for w in range(n):
                    if w == v:
                        continue
                    bv = inblossom[v]
                    bw = inblossom[w]
                    if bv == bw:
                        continue
                    kslack = 0.0
                    if not allowedge[v, w]:
                        kslack = dualvar[v] + dualvar[w] - wt2[v, w]
                        if kslack <= 0.0:
                            allowedge[v, w] = True
                            allowedge[w, v] = True
                    if allowedge[v, w]:
                        if label[bw] == 0:
                            _assign_label(w, 2, v, n, label, labeledge,
                                          bestedge, inblossom, blossombase,
                                          mate, childs, nchilds, queue, qn,
                                          leafbuf)
                        elif label[bw] == 1:
                            base = _scan_blossom(v, w, n, label, labeledge,
                                                 inblossom, blossombase)
                            if base >= 0:
                                # --- add blossom(base, v, w) ---
                                if nunused == 0:
                                    return mate  # cannot happen
                                nunused -= 1
                                b = unused[nunused]
                                bi = b - n
                                bb = inblossom[base]
                                blossombase[b] = base
                                blossomparent[b] = -1
                                blossomparent[bb] = b
                                # collect path v-side (reversed later)
                                tmpc = np.empty(n + 2, dtype=np.int64)
                                tmpe = np.empty((n + 2, 2), dtype=np.int64)
                                tn = 0
                                tmpe[tn, 0] = v
                                tmpe[tn, 1] = w
                                vv = v
                                bv2 = inblossom[vv]
                                while bv2 != bb:
                                    blossomparent[bv2] = b
                                    tmpc[tn] = bv2
                                    tn += 1
                                    tmpe[tn, 0] = labeledge[bv2, 0]
                                    tmpe[tn, 1] = labeledge[bv2, 1]
                                    vv = labeledge[bv2, 0]
                                    bv2 = inblossom[vv]
                                # childs so far: [bv..] ; prepend bb, reverse
                                nch = 0
                                childs[bi, nch] = bb
                                nch += 1
                                for i in range(tn - 1, -1, -1):
                                    childs[bi, nch] = tmpc[i]
                                    nch += 1
                                # edges reversed: tmpe[tn..0]
                                ne = 0
                                for i in range(tn, -1, -1):
                                    endps[bi, ne, 0] = tmpe[i, 0]
                                    endps[bi, ne, 1] = tmpe[i, 1]
                                    ne += 1
                                # trace back from w
                                ww = w
                                bw2 = inblossom[ww]
                                while bw2 != bb:
                                    blossomparent[bw2] = b
                                    childs[bi, nch] = bw2
                                    nch += 1
                                    endps[bi, ne, 0] = labeledge[bw2, 1]
                                    endps[bi, ne, 1] = labeledge[bw2, 0]
                                    ne += 1
                                    ww = labeledge[bw2, 0]
                                    bw2 = inblossom[ww]
                                nchilds[bi] = nch
                                label[b] = 1
                                labeledge[b, 0] = labeledge[bb, 0]
                                labeledge[b, 1] = labeledge[bb, 1]
                                blossomdual[bi] = 0.0
                                cnt = _blossom_leaves(b, n, childs, nchilds,
                                                      leafbuf2)
                                for i in range(cnt):
                                    u = leafbuf2[i]
                                    if label[inblossom[u]] == 2:
                                        queue[qn[0]] = u
                                        qn[0] += 1
                                    inblossom[u] = b
                                # recompute best edge to other S-blossoms
                                bev = -1
                                bew = -1
                                besl = 0.0
                                for i in range(cnt):
                                    u = leafbuf2[i]
                                    for x in range(n):
                                        bx = inblossom[x]
                                        if bx == b or label[bx] != 1:
                                            continue
                                        sl = (dualvar[u] + dualvar[x]
                                              - wt2[u, x])
                                        if bev < 0 or sl < besl:
                                            besl = sl
                                            bev = u
                                            bew = x
                                bestedge[b, 0] = bev
                                bestedge[b, 1] = bew
                            else:
                                # --- augment matching along v--w ---
                                for side in range(2):
                                    if side == 0:
                                        s = v
                                        j = w
                                    else:
                                        s = w
                                        j = v
                                    while True:
                                        bs = inblossom[s]
                                        if bs >= n:
                                            _augment_blossom(
                                                bs, s, n, blossomparent,
                                                blossombase, childs, nchilds,
                                                endps, mate, augstack_b,
                                                augstack_v)
                                        mate[s] = j
                                        if labeledge[bs, 0] < 0:
                                            break
                                        t = labeledge[bs, 0]
                                        bt = inblossom[t]
                                        s = labeledge[bt, 0]
                                        j = labeledge[bt, 1]
                                        if bt >= n:
                                            _augment_blossom(
                                                bt, j, n, blossomparent,
                                                blossombase, childs, nchilds,
                                                endps, mate, augstack_b,
                                                augstack_v)
                                        mate[j] = s
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labeledge[w, 0] = v
                            labeledge[w, 1] = w
                    elif label[bw] == 1:
                        if bestedge[bv, 0] < 0 or kslack < (
                                dualvar[bestedge[bv, 0]]
                                + dualvar[bestedge[bv, 1]]
                                - wt2[bestedge[bv, 0], bestedge[bv, 1]]):
                            bestedge[bv, 0] = v
                            bestedge[bv, 1] = w
                    elif label[w] == 0:
                        if bestedge[w, 0] < 0 or kslack < (
                                dualvar[bestedge[w, 0]]
                                + dualvar[bestedge[w, 1]]
                                - wt2[bestedge[w, 0], bestedge[w, 1]]):
                            bestedge[w, 0] = v
                            bestedge[w, 1] = w
            if augmented:
                break
            # ---- compute delta ----
            deltatype = -1
            delta = 0.0
            deltaedge_v = -1
            deltaedge_w = -1
            deltablossom = -1
            for v in range(n):
                if label[inblossom[v]] == 0 and bestedge[v, 0] >= 0:
                    d = (dualvar[bestedge[v, 0]] + dualvar[bestedge[v, 1]]
                         - wt2[bestedge[v, 0], bestedge[v, 1]])
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge_v = bestedge[v, 0]
                        deltaedge_w = bestedge[v, 1]
            for b in range(nb):
                if (blossomparent[b] == -1 and blossombase[b] >= 0
                        and label[b] == 1 and bestedge[b, 0] >= 0):
                    d = (dualvar[bestedge[b, 0]] + dualvar[bestedge[b, 1]]
                         - wt2[bestedge[b, 0], bestedge[b, 1]]) / 2.0
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge_v = bestedge[b, 0]
                        deltaedge_w = bestedge[b, 1]
            for b in range(n, nb):
                if (blossombase[b] >= 0 and blossomparent[b] == -1
                        and label[b] == 2
                        and (deltatype == -1 or blossomdual[b - n] < delta)):
                    delta = blossomdual[b - n]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                deltatype = 1
                dmin = dualvar[0]
                for v in range(1, n):
                    if dualvar[v] < dmin:
                        dmin = dualvar[v]
                delta = dmin if dmin > 0.0 else 0.0
            # ---- update duals ----
            for v in range(n):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(n, nb):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        blossomdual[b - n] += delta
                    elif label[b] == 2:
                        blossomdual[b - n] -= delta
            # ---- act on minimum delta ----
            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge_v, deltaedge_w] = True
                allowedge[deltaedge_w, deltaedge_v] = True
                queue[qn[0]] = deltaedge_v
                qn[0] += 1
            elif deltatype == 3:
                allowedge[deltaedge_v, deltaedge_w] = True
                allowedge[deltaedge_w, deltaedge_v] = True
                queue[qn[0]] = deltaedge_v
                qn[0] += 1
            else:
                nunused = _expand_blossom(
                    deltablossom, False, n, label, labeledge, bestedge,
                    inblossom, blossomparent, blossombase, blossomdual, mate,
                    childs, nchilds, endps, allowedge, queue, qn, unused,
                    nunused, leafbuf, expstack)
        if not augmented:
            break
        # expand S-blossoms whose dual has dropped to zero
        for b in range(n, nb):
            if (blossombase[b] >= 0 and blossomparent[b] == -1
                    and label[b] == 1 and blossomdual[b - n] == 0.0):
                nunused = _expand_blossom(
                    b, True, n, label, labeledge, bestedge, inblossom,
                    blossomparent, blossombase, blossomdual, mate, childs,
                    nchilds, endps, allowedge, queue, qn, unused, nunused,
                    leafbuf, expstack)
    return mate


@njit(cache=True)
def _augment_blossom(b0, v0, n, blossomparent, blossombase, childs, nchilds,
                     endps, mate, stack_b, stack_v):
    """Rearrange the matching inside blossom b0 so that v0 becomes its base."""
    sp = 0
    stack_b[sp] = b0
    stack_v[sp] = v0
    sp += 1
    while sp > 0:
        sp -= 1
        b = stack_b[sp]
        v = stack_v[sp]
        bi = b - n
        nch = nchilds[bi]
        # immediate child of b containing v
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= n:
            stack_b[sp] = t
            stack_v[sp] = v
            sp += 1
        i = 0
        for idx in range(nch):
            if childs[bi, idx] == t:
                i = idx
                break
        j = i
        if i & 1:
            j -= nch
            jstep = 1
        else:
            jstep = -1
        while j != 0:
            j += jstep
            t = childs[bi, j % nch]
            if jstep == 1:
                w = endps[bi, j % nch, 0]
                x = endps[bi, j % nch, 1]
            else:
                x = endps[bi, (j - 1) % nch, 0]
                w = endps[bi, (j - 1) % nch, 1]
            if t >= n:
                stack_b[sp] = t
                stack_v[sp] = w
                sp += 1
            j += jstep
            t = childs[bi, j % nch]
            if t >= n:
                stack_b[sp] = t
                stack_v[sp] = x
                sp += 1
            mate[w] = x
            mate[x] = w
        # rotate children so that the child containing v comes first
        if i > 0:
            tmpc = np.empty(nch, dtype=np.int64)
            tmpe = np.empty((nch, 2), dtype=np.int64)
            for idx in range(nch):
                tmpc[idx] = childs[bi, (i + idx) % nch]
                tmpe[idx, 0] = endps[bi, (i + idx) % nch, 0]
                tmpe[idx, 1] = endps[bi, (i + idx) % nch, 1]
            for idx in range(nch):
                childs[bi, idx] = tmpc[idx]
                endps[bi, idx, 0] = tmpe[idx, 0]
                endps[bi, idx, 1] = tmpe[idx, 1]
        # The new base is v itself (children tasks may still be pending on
        # the stack, so blossombase of childs[0] cannot be read yet).
        blossombase[b] = v


@njit(cache=True)
def _expand_blossom(b0, endstage, n, label, labeledge, bestedge, inblossom,
                    blossomparent, blossombase, blossomdual, mate, childs,
                    nchilds, endps, allowedge, queue, qn, unused, nunused,
                    leafbuf, expstack):
    """Dissolve blossom b0; relabel its parts if expanding a T-blossom."""
    sp = 0
    expstack[sp] = b0
    sp += 1
    first = True
    while sp > 0:
        sp -= 1
        b = expstack[sp]
        bi = b - n
        nch = nchilds[bi]
        for idx in range(nch):
            s = childs[bi, idx]
            blossomparent[s] = -1
            if s < n:
                inblossom[s] = s
            elif endstage and blossomdual[s - n] == 0.0:
                expstack[sp] = s
                sp += 1
            else:
                cnt = _blossom_leaves(s, n, childs, nchilds, leafbuf)
                for i in range(cnt):
                    inblossom[leafbuf[i]] = s
        if (not endstage) and label[b] == 2 and first:
            # Relabel along the blossom ring, starting at the entry child.
            entrychild = inblossom[labeledge[b, 1]]
            j = 0
            for idx in range(nch):
                if childs[bi, idx] == entrychild:
                    j = idx
                    break
            if j & 1:
                j -= nch
                jstep = 1
            else:
                jstep = -1
            v = labeledge[b, 0]
            w = labeledge[b, 1]
            while j != 0:
                if jstep == 1:
                    p = endps[bi, j % nch, 0]
                    q = endps[bi, j % nch, 1]
                else:
                    q = endps[bi, (j - 1) % nch, 0]
                    p = endps[bi, (j - 1) % nch, 1]
                label[w] = 0
                label[q] = 0
                _assign_label(w, 2, v, n, label, labeledge, bestedge,
                              inblossom, blossombase, mate, childs, nchilds,
                              queue, qn, leafbuf)
                allowedge[p, q] = True
                allowedge[q, p] = True
                j += jstep
                if jstep == 1:
                    v = endps[bi, j % nch, 0]
                    w = endps[bi, j % nch, 1]
                else:
                    w = endps[bi, (j - 1) % nch, 0]
                    v = endps[bi, (j - 1) % nch, 1]
                allowedge[v, w] = True
                allowedge[w, v] = True
                j += jstep
            bw = childs[bi, 0]
            label[w] = 2
            label[bw] = 2
            labeledge[w, 0] = v
            labeledge[w, 1] = w
            labeledge[bw, 0] = v
            labeledge[bw, 1] = w
            bestedge[bw, 0] = -1
            j += jstep
            while childs[bi, j % nch] != entrychild:
                bv = childs[bi, j % nch]
                if label[bv] == 1:
                    j += jstep
                    continue
                vv = -1
                if bv >= n:
                    cnt = _blossom_leaves(bv, n, childs, nchilds, leafbuf)
                    for i in range(cnt):
                        if label[leafbuf[i]] != 0:
                            vv = leafbuf[i]
                            break
                else:
                    if label[bv] != 0:
                        vv = bv
                if vv >= 0:
                    label[vv] = 0
                    label[mate[blossombase[bv]]] = 0
                    _assign_label(vv, 2, labeledge[vv, 0], n, label,
                                  labeledge, bestedge, inblossom, blossombase,
                                  mate, childs, nchilds, queue, qn, leafbuf)
                j += jstep
        # recycle
        label[b] = 0
        labeledge[b, 0] = -1
        labeledge[b, 1] = -1
        bestedge[b, 0] = -1
        blossombase[b] = -1
        nchilds[bi] = 0
        blossomdual[bi] = 0.0
        unused[nunused] = b
        nunused += 1
        first = False
    return nunused


def max_weight_matching_dense(weights):
    """Maximum-weight maximum-cardinality matching of a complete graph.

    weights: symmetric (n, n) array of edge weights (diagonal ignored).
    Returns mate array of length n (mate[i] = j, or -1 when n is odd and i
    stayed single, which cannot happen here since cardinality is maximal).
    """
    w = np.ascontiguousarray(weights, dtype=np.float64)
    n = w.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if n == 1:
        return np.full(1, -1, dtype=np.int64)
    return _mwm_dense(2.0 * w, n)
