"""Vertex superalgebra OPE engine.

States are linear combinations of normally ordered PBW words in derivatives of
generators, stored as {word: coeff} with word = ((gen_index, d), ...) sorted by
the factor key (weight + d, gen_index, d), right-nested reading. Products a_(r)b
for r >= -1 are computed by the standard identities: derivative shifts, the
non-commutative Wick formula, skew-symmetry, and the mode expansion of normally
ordered products. Coefficients may be any commutative-ring values supporting
+, -, * with each other and with int/Fraction (exact rationals, symbolic
scalars, or affine expressions in solver unknowns)."""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial


class EngineError(Exception):
    pass


class MissingEntryError(EngineError):
    """Product requested outside the stored table contract."""

    def __init__(self, a, b, r):
        self.pair = (a, b)
        self.r = r
        super().__init__(f"no table entry for pair ({a}, {b}) at pole r={r}")


class Generator:
    __slots__ = ("name", "parity", "weight", "charge", "sigma_image", "sigma_sign")

    def __init__(self, name, parity, weight, charge, sigma_image=None, sigma_sign=1):
        self.name = name
        self.parity = parity  # 0 even, 1 odd
        self.weight = Fraction(weight)
        self.charge = Fraction(charge)
        self.sigma_image = sigma_image  # generator index or None
        self.sigma_sign = Fraction(sigma_sign)

    def __repr__(self):
        return f"Generator({self.name})"


# ---------------------------------------------------------------------------
# state helpers (plain dicts {word: coeff}; zero coefficients never stored)

def acc(out, word, coeff):
    if not coeff:
        return
    cur = out.get(word)
    if cur is None:
        out[word] = coeff
    else:
        cur = cur + coeff
        if cur:
            out[word] = cur
        else:
            del out[word]


def sadd(a, b):
    out = dict(a)
    for w, cf in b.items():
        acc(out, w, cf)
    return out


def saxpy(out, k, s):
    if not k:
        return
    for w, cf in s.items():
        acc(out, w, k * cf)


def sscale(s, k):
    if not k:
        return {}
    return {w: k * cf for w, cf in s.items()}


def sneg(s):
    return {w: -cf for w, cf in s.items()}


def ssub(a, b):
    out = dict(a)
    for w, cf in b.items():
        acc(out, w, -cf)
    return out


_FACT_INV = [Fraction(1, factorial(i)) for i in range(40)]


class Algebra:
    """Generator list plus one-directional OPE table (pair (a, b) stored for
    a <= b; the reverse direction is recovered by skew-symmetry)."""

    def __init__(self, gens, unit):
        self.gens = list(gens)
        self.unit = unit  # multiplicative identity of the coefficient ring
        self.table = {}  # (a, b) -> {r: state}, a <= b
        self.declared = set()  # pairs present in the contract
        self._memo_prod = {}
        self._memo_ins = {}
        self._memo_der = {}
        self._basis_cache = {}

    # -- structure ------------------------------------------------------
    def add_generator(self, gen):
        self.gens.append(gen)
        self._basis_cache.clear()
        return len(self.gens) - 1

    def gen_index(self, name):
        for i, g in enumerate(self.gens):
            if g.name == name:
                return i
        raise KeyError(name)

    def gen_state(self, idx, d=0):
        return {((idx, d),): self.unit}

    def declare_pair(self, a, b):
        if a > b:
            a, b = b, a
        self.declared.add((a, b))
        self.table.setdefault((a, b), {})

    def _check_entry(self, a, b, r, state):
        expected = self.gens[a].weight + self.gens[b].weight - r - 1
        for w in state:
            if self.word_weight(w) != expected:
                raise EngineError(
                    f"entry ({self.gens[a].name},{self.gens[b].name}) r={r}: "
                    f"word {self.word_name(w)} has weight {self.word_weight(w)}, "
                    f"expected {expected}"
                )
            if not self.is_canonical(w):
                raise EngineError(f"non-canonical word {self.word_name(w)}")

    def set_entry(self, a, b, r, state):
        """Store a_(r) b = state; requires a <= b and weight homogeneity."""
        if a > b:
            raise EngineError("table entries are stored with a <= b only")
        self.declare_pair(a, b)
        self._check_entry(a, b, r, state)
        if state:
            self.table[(a, b)][r] = dict(state)
        else:
            self.table[(a, b)].pop(r, None)
        self.clear_memos()

    def set_entries(self, a, b, entries, clear_memos=True):
        """Store every mode of one pair at once. The table builder passes
        clear_memos=False under a write-before-read discipline: a pair's
        entries are complete before any product consults the pair, so cached
        products remain valid."""
        if a > b:
            raise EngineError("table entries are stored with a <= b only")
        self.declare_pair(a, b)
        for r, state in entries.items():
            self._check_entry(a, b, r, state)
            if state:
                self.table[(a, b)][r] = dict(state)
            else:
                self.table[(a, b)].pop(r, None)
        if clear_memos:
            self.clear_memos()

    def entry(self, a, b, r):
        if a > b:
            raise EngineError("entries are addressed with a <= b")
        return self.table.get((a, b), {}).get(r, {})

    def clear_memos(self):
        self._memo_prod.clear()
        self._memo_ins.clear()
        self._memo_der.clear()

    # -- word utilities ---------------------------------------------------
    def factor_key(self, f):
        g, d = f
        return (self.gens[g].weight + d, g, d)

    def word_weight(self, w):
        out = Fraction(0)
        for g, d in w:
            out += self.gens[g].weight + d
        return out

    def word_charge(self, w):
        out = Fraction(0)
        for g, _ in w:
            out += self.gens[g].charge
        return out

    def word_parity(self, w):
        return sum(self.gens[g].parity for g, _ in w) & 1

    def is_canonical(self, w):
        for i in range(len(w) - 1):
            ka, kb = self.factor_key(w[i]), self.factor_key(w[i + 1])
            if ka > kb:
                return False
            if ka == kb and self.gens[w[i][0]].parity:
                return False
        return True

    def word_name(self, w):
        if not w:
            return "1"
        parts = []
        for g, d in w:
            nm = self.gens[g].name
            parts.append(nm if d == 0 else f"d^{d} {nm}")
        return ":" + " ".join(parts) + ":"

    def state_weight(self, s):
        wts = {self.word_weight(w) for w in s}
        if len(wts) > 1:
            raise EngineError(f"inhomogeneous state: weights {sorted(wts)}")
        return wts.pop() if wts else None

    def state_name(self, s):
        if not s:
            return "0"
        return " + ".join(
            f"({cf})*{self.word_name(w)}" for w, cf in sorted(s.items())
        )

    # -- core products ------------------------------------------------------
    def prod(self, sa, r, sb):
        """a_(r) b for states, any integer mode r."""
        out = {}
        for wa, ca in sa.items():
            for wb, cb in sb.items():
                saxpy(out, ca * cb, self.wprod(wa, r, wb))
        return out

    def nprod(self, sa, sb):
        return self.prod(sa, -1, sb)

    def wprod(self, wa, r, wb):
        key = (wa, r, wb)
        hit = self._memo_prod.get(key)
        if hit is not None:
            return hit
        out = self._wprod(wa, r, wb)
        self._memo_prod[key] = out
        return out

    def _wprod(self, wa, r, wb):
        if not wa:
            return {wb: self.unit} if r == -1 else {}
        if r < -1:
            # x_(-1-t) y = (d^t x / t!)_(-1) y
            t = -1 - r
            left = self.derive({wa: self.unit}, t)
            out = {}
            for wl, cl in left.items():
                saxpy(out, _FACT_INV[t] * cl, self.wprod(wl, -1, wb))
            return out
        if not wb:
            return {wa: self.unit} if r == -1 else {}
        if r >= 0 and self.word_weight(wa) + self.word_weight(wb) - r - 1 < 0:
            return {}
        if len(wa) == 1:
            g, d = wa[0]
            if r == -1:
                return self.insert(wa[0], wb)
            if d > 0:
                if r == 0:
                    return {}
                return sscale(self.wprod(((g, d - 1),), r - 1, wb), -r)
            return self._bare_prod(g, r, wb)
        return self._peel(wa, r, wb)

    def _bare_prod(self, g, r, wb):
        # left factor is a bare generator, r >= 0
        if len(wb) == 1:
            h, e = wb[0]
            if e > 0:
                # a_(r) db = d(a_(r) b) + r a_(r-1) b
                out = self.derive(self.wprod(((g, 0),), r, ((h, e - 1),)))
                if r > 0:
                    saxpy(out, Fraction(r), self.wprod(((g, 0),), r - 1, ((h, e - 1),)))
                return out
            return self.gen_prod(g, r, h)
        f = wb[0]
        rest = wb[1:]
        gp = self.gens[g].parity
        fp = self.gens[f[0]].parity
        sign = -1 if (gp and fp) else 1
        out = {}
        # :(a_(r) f) rest:
        for w, cf in self.wprod(((g, 0),), r, (f,)).items():
            saxpy(out, cf, self.wprod(w, -1, rest))
        # +/- :f (a_(r) rest):
        for w, cf in self.wprod(((g, 0),), r, rest).items():
            saxpy(out, sign * cf, self.insert(f, w))
        # integral corrections
        for i in range(1, r + 1):
            left = self.wprod(((g, 0),), r - i, (f,))
            if not left:
                continue
            coef = Fraction(comb(r, i))
            for w, cf in left.items():
                for w2, cf2 in self.wprod(w, i - 1, rest).items():
                    acc(out, w2, coef * cf * cf2)
        return out

    def _peel(self, wa, r, wb):
        # (:a B:)_(r) c = sum_i a_(-1-i)(B_(r+i) c)
        #               + (-1)^{p(a)p(B)} sum_i B_(r-1-i)(a_(i) c)
        a = wa[0]
        B = wa[1:]
        pa = self.gens[a[0]].parity
        pB = self.word_parity(B)
        sign = -1 if (pa and pB) else 1
        out = {}
        wB = self.word_weight(B)
        wc = self.word_weight(wb)
        wa0 = self.gens[a[0]].weight + a[1]
        i = 0
        while True:
            m = r + i  # m >= -1 always since r >= -1, i >= 0
            if m >= 0 and wB + wc - m - 1 < 0:
                break
            inner = self.wprod(B, m, wb)
            if inner:
                fi = _FACT_INV[i]
                bumped = (a[0], a[1] + i)
                for w, cf in inner.items():
                    saxpy(out, fi * cf, self.insert(bumped, w))
            i += 1
        i = 0
        while True:
            if wa0 + wc - i - 1 < 0:
                break
            inner = self.wprod((a,), i, wb)
            if inner:
                m = r - 1 - i
                saxpy(out, Fraction(sign), self._mode_word_state(B, m, inner))
            i += 1
        return out

    def _mode_word_state(self, wB, m, state):
        out = {}
        for w, cf in state.items():
            saxpy(out, cf, self.wprod(wB, m, w))
        return out

    def insert(self, f, wb):
        key = (f, wb)
        hit = self._memo_ins.get(key)
        if hit is not None:
            return hit
        out = self._insert(f, wb)
        self._memo_ins[key] = out
        return out

    def _insert(self, f, wb):
        if not wb:
            return {(f,): self.unit}
        h = wb[0]
        kf, kh = self.factor_key(f), self.factor_key(h)
        odd_f = self.gens[f[0]].parity
        if kf < kh or (kf == kh and not odd_f):
            return {(f,) + wb: self.unit}
        rest = wb[1:]
        ph = self.gens[h[0]].parity
        sign = -1 if (odd_f and ph) else 1
        # corrections sum_i (-1)^i/(i+1)! : (d^{i+1}(f_(i) h)) rest :
        corr = {}
        wf = self.gens[f[0]].weight + f[1]
        wh = self.gens[h[0]].weight + h[1]
        i = 0
        while wf + wh - i - 1 >= 0:
            x = self.wprod((f,), i, (h,))
            if x:
                st = {w: cf for w, cf in x.items()}
                for _ in range(i + 1):
                    st = self.derive(st)
                coef = _FACT_INV[i + 1] * (1 if i % 2 == 0 else -1)
                for w, cf in st.items():
                    for w2, cf2 in self.wprod(w, -1, rest).items():
                        acc(corr, w2, coef * cf * cf2)
            i += 1
        if kf == kh:
            # odd repeated factor: f_(-1)(f_(-1) rest) = corr/2
            return sscale(corr, Fraction(1, 2))
        out = corr
        for w, cf in self._insert_state(h, self.insert(f, rest)).items():
            acc(out, w, sign * cf)
        return out

    def _insert_state(self, f, state):
        out = {}
        for w, cf in state.items():
            saxpy(out, cf, self.insert(f, w))
        return out

    def gen_prod(self, g, r, h):
        """Bare generator pair product via table lookup, skew-flipped when the
        pair is stored in the other direction."""
        wsum = self.gens[g].weight + self.gens[h].weight
        if r >= 0 and wsum - r - 1 < 0:
            return {}
        a, b = (g, h) if g <= h else (h, g)
        if (a, b) not in self.declared:
            raise MissingEntryError(self.gens[g].name, self.gens[h].name, r)
        if g <= h:
            return self.table[(a, b)].get(r, {})
        # skew: g_(r) h = (-1)^{pg ph} sum_{j>=0} (-1)^{r+j+1}/j! d^j (h_(r+j) g)
        sgn = -1 if (self.gens[g].parity and self.gens[h].parity) else 1
        out = {}
        j = 0
        while wsum - (r + j) - 1 >= 0:
            base = self.table[(a, b)].get(r + j, {})
            if base:
                st = dict(base)
                for _ in range(j):
                    st = self.derive(st)
                coef = Fraction(sgn * (1 if (r + j + 1) % 2 == 0 else -1)) * _FACT_INV[j]
                saxpy(out, coef, st)
            j += 1
        return out

    # -- translation -------------------------------------------------------
    def derive_word(self, w):
        hit = self._memo_der.get(w)
        if hit is not None:
            return hit
        out = {}
        for pos in range(len(w)):
            seq = list(w)
            g, d = seq[pos]
            seq[pos] = (g, d + 1)
            saxpy(out, Fraction(1), self.normalize_seq(seq))
        self._memo_der[w] = out
        return out

    def derive(self, state, n=1):
        for _ in range(n):
            out = {}
            for w, cf in state.items():
                saxpy(out, cf, self.derive_word(w))
            state = out
        return state

    def normalize_seq(self, seq):
        """Normal product :f1 :f2 ... fk:..: of an arbitrary factor sequence."""
        if not seq:
            return {(): self.unit}
        state = {(seq[-1],): self.unit}
        for f in reversed(seq[:-1]):
            state = self._insert_state(f, state)
        return state

    # -- automorphism -------------------------------------------------------
    def apply_sigma(self, state):
        out = {}
        for w, cf in state.items():
            sign = Fraction(1)
            seq = []
            for g, d in w:
                gen = self.gens[g]
                if gen.sigma_image is None:
                    raise EngineError(f"no sigma image for {gen.name}")
                sign *= gen.sigma_sign
                seq.append((gen.sigma_image, d))
            saxpy(out, sign * cf, self.normalize_seq(seq))
        return out

    # -- Jacobi ---------------------------------------------------------------
    def jacobi_residue(self, sa, r, s, sb, sc):
        """J_{r,s}(a,b,c) = a_(r)(b_(s)c) - (-1)^{p(a)p(b)} b_(s)(a_(r)c)
        - sum_{i=0}^{r} C(r,i) (a_(i)b)_(r+s-i) c; zero in any vertex algebra."""
        pa = self._state_parity(sa)
        pb = self._state_parity(sb)
        sign = -1 if (pa and pb) else 1
        out = self.prod(sa, r, self.prod(sb, s, sc))
        saxpy(out, Fraction(-sign), self.prod(sb, s, self.prod(sa, r, sc)))
        for i in range(r + 1):
            ab = self.prod(sa, i, sb)
            if ab:
                saxpy(out, Fraction(-comb(r, i)), self.prod(ab, r + s - i, sc))
        return out

    def _state_parity(self, s):
        ps = {self.word_parity(w) for w in s}
        if len(ps) > 1:
            raise EngineError("state of mixed parity")
        return ps.pop() if ps else 0

    # -- basis enumeration ------------------------------------------------------
    def weight_basis(self, weight, charge=None, parity=None, max_d=None):
        """All PBW words of the exact given weight (optionally filtered)."""
        weight = Fraction(weight)
        words = self._words_up_to(weight)
        out = [w for w in words if self.word_weight(w) == weight]
        if charge is not None:
            charge = Fraction(charge)
            out = [w for w in out if self.word_charge(w) == charge]
        if parity is not None:
            out = [w for w in out if self.word_parity(w) == parity]
        return out

    def _words_up_to(self, weight):
        key = weight
        hit = self._basis_cache.get(key)
        if hit is not None:
            return hit
        factors = []
        for g, gen in enumerate(self.gens):
            d = 0
            while gen.weight + d <= weight:
                factors.append((g, d))
                d += 1
        factors.sort(key=self.factor_key)
        out = []

        def rec(start, remaining, acc_word):
            out.append(tuple(acc_word))
            for idx in range(start, len(factors)):
                f = factors[idx]
                wf = self.gens[f[0]].weight + f[1]
                if wf > remaining:
                    continue
                if acc_word and f == acc_word[-1] and self.gens[f[0]].parity:
                    continue  # odd factors may not repeat at equal derivative order
                acc_word.append(f)
                rec(idx, remaining - wf, acc_word)
                acc_word.pop()

        rec(0, weight, [])
        self._basis_cache[key] = out
        return out

    def graded_dimension(self, weight):
        return len(self.weight_basis(weight))

    # -- coefficient mapping -----------------------------------------------------
    def map_coefficients(self, fn, unit):
        alg = Algebra(self.gens, unit)
        alg.declared = set(self.declared)
        for pair, entries in self.table.items():
            new = {}
            for r, state in entries.items():
                st = {}
                for w, cf in state.items():
                    v = fn(cf)
                    if v:
                        st[w] = v
                if st:
                    new[r] = st
            alg.table[pair] = new
        return alg


# ---------------------------------------------------------------------------
# serialization (format: generators + one-directional products)

def serialize(alg, scalar_text=None):
    if scalar_text is None:
        scalar_text = lambda cf: cf.to_text()
    gens = []
    for g in alg.gens:
        row = {
            "name": g.name,
            "parity": g.parity,
            "weight": str(g.weight),
            "charge": str(g.charge),
        }
        if g.sigma_image is not None:
            row["sigma"] = [g.sigma_image, int(g.sigma_sign)]
        gens.append(row)
    # declared pairs are listed separately: a pair whose every mode vanishes
    # (a regular OPE) emits no product rows but must survive a round trip
    pairs = [
        [alg.gens[a].name, alg.gens[b].name] for (a, b) in sorted(alg.declared)
    ]
    products = []
    for (a, b) in sorted(alg.table):
        entries = alg.table[(a, b)]
        for r in sorted(entries):
            state = entries[r]
            rows = [
                [scalar_text(cf), [[alg.gens[g].name, d] for g, d in w]]
                for w, cf in sorted(state.items())
            ]
            products.append(
                {
                    "a": alg.gens[a].name,
                    "b": alg.gens[b].name,
                    "r": r,
                    "state": rows,
                }
            )
    return {"generators": gens, "pairs": pairs, "products": products}


def deserialize(data, unit, scalar_parse):
    gens = []
    for g in data["generators"]:
        sig = g.get("sigma")
        gens.append(
            Generator(
                g["name"],
                int(g["parity"]),
                Fraction(g["weight"]),
                Fraction(g["charge"]),
                sigma_image=None if sig is None else int(sig[0]),
                sigma_sign=1 if sig is None else int(sig[1]),
            )
        )
    alg = Algebra(gens, unit)
    index = {g.name: i for i, g in enumerate(alg.gens)}
    for a_name, b_name in data.get("pairs", ()):
        alg.declare_pair(index[a_name], index[b_name])
    for row in data["products"]:
        a, b, r = index[row["a"]], index[row["b"]], int(row["r"])
        state = {}
        for cf_text, word in row["state"]:
            w = tuple((index[nm], int(d)) for nm, d in word)
            state[w] = scalar_parse(cf_text)
        alg.declare_pair(a, b)
        alg.set_entry(a, b, r, state)
    return alg
