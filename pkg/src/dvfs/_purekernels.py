"""Reference implementation of the index hashing kernels."""
from hashlib import sha512

_SEP = b"\x1f"


def node_key(tag, bits, token):
    return sha512(tag + bits + _SEP + token).digest()


def path_keys(tag, leaf_bits, token):
    """Keys for every prefix of ``leaf_bits``, root first."""
    suffix = _SEP + token
    return [sha512(tag + leaf_bits[:i] + suffix).digest() for i in range(len(leaf_bits) + 1)]


def surviving(entries, tag, bits, tokens, alive):
    """Indices from ``alive`` whose key at node ``bits`` is in ``entries``."""
    prefix = tag + bits + _SEP
    return [i for i in alive if sha512(prefix + tokens[i]).digest() in entries]
