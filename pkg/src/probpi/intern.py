"""Hash-consing for frozen dataclass nodes.

Terms, actions, formulas and convex-set nodes are built bottom-up and
compared constantly (cache keys, distribution merging).  Interning makes
structurally equal nodes pointer-identical, so equality and hashing are
O(1); without it, deep trees re-hash their whole spine on every lookup.
"""

from __future__ import annotations

from dataclasses import MISSING, fields


def interned(cls):
    """Class decorator for frozen dataclasses: canonical instances only."""
    table: dict = {}
    field_list = fields(cls)
    names = tuple(f.name for f in field_list)
    defaults = {
        f.name: f.default for f in field_list if f.default is not MISSING
    }

    n_fields = len(names)

    def __new__(klass, *args, **kwargs):
        if not kwargs and len(args) == n_fields:
            key = args
        else:
            bound = dict(zip(names, args))
            bound.update(kwargs)
            for k, v in defaults.items():
                bound.setdefault(k, v)
            key = tuple(bound.get(n) for n in names)
        got = table.get(key)
        if got is None:
            got = object.__new__(klass)
            table[key] = got
        return got

    def __eq__(self, other):
        return self is other

    def __ne__(self, other):
        return self is not other

    def __hash__(self):
        return object.__hash__(self)

    cls.__new__ = __new__
    cls.__eq__ = __eq__
    cls.__ne__ = __ne__
    cls.__hash__ = __hash__
    cls.__copy__ = lambda self: self
    cls.__deepcopy__ = lambda self, memo: self
    return cls
