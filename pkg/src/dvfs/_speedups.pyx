# cython: boundscheck=False, wraparound=False
"""Compiled index hashing kernels; same contract as ``_purekernels``."""
from libc.string cimport memcpy
from cpython.bytes cimport PyBytes_FromStringAndSize, PyBytes_AS_STRING, PyBytes_GET_SIZE

cdef extern from "openssl/evp.h":
    ctypedef struct EVP_MD:
        pass
    ctypedef struct EVP_MD_CTX:
        pass
    EVP_MD *EVP_MD_fetch(void *libctx, const char *algorithm, const char *properties)
    EVP_MD_CTX *EVP_MD_CTX_new()
    int EVP_DigestInit_ex(EVP_MD_CTX *ctx, const EVP_MD *type, void *impl) nogil
    int EVP_DigestUpdate(EVP_MD_CTX *ctx, const void *d, size_t cnt) nogil
    int EVP_DigestFinal_ex(EVP_MD_CTX *ctx, unsigned char *md, unsigned int *s) nogil

# One fetched algorithm and one reusable context; the GIL serializes use.
cdef EVP_MD *_MD = EVP_MD_fetch(NULL, b"SHA512", NULL)
cdef EVP_MD_CTX *_CTX = EVP_MD_CTX_new()
if _MD == NULL or _CTX == NULL:
    raise ImportError("libcrypto SHA-512 unavailable")

DEF BUF = 512

cdef inline bytes _digest(const unsigned char *buf, size_t n):
    cdef unsigned char md[64]
    cdef unsigned int outlen = 0
    if (EVP_DigestInit_ex(_CTX, _MD, NULL) != 1
            or EVP_DigestUpdate(_CTX, buf, n) != 1
            or EVP_DigestFinal_ex(_CTX, md, &outlen) != 1):
        raise RuntimeError("SHA-512 failed")
    return PyBytes_FromStringAndSize(<char *>md, 64)


cdef size_t _layout(unsigned char *buf, bytes tag, bytes bits, Py_ssize_t nbits) except 0:
    cdef Py_ssize_t t = PyBytes_GET_SIZE(tag)
    if t + nbits + 1 + 64 > BUF:
        raise ValueError("path or tag too long for kernel buffer")
    memcpy(buf, PyBytes_AS_STRING(tag), t)
    memcpy(buf + t, PyBytes_AS_STRING(bits), nbits)
    buf[t + nbits] = 0x1f
    return t + nbits + 1


def node_key(bytes tag, bytes bits, bytes token):
    cdef unsigned char buf[BUF]
    cdef size_t off = _layout(buf, tag, bits, PyBytes_GET_SIZE(bits))
    cdef Py_ssize_t n = PyBytes_GET_SIZE(token)
    if off + n > BUF:
        raise ValueError("token too long for kernel buffer")
    memcpy(buf + off, PyBytes_AS_STRING(token), n)
    return _digest(buf, off + n)


def path_keys(bytes tag, bytes leaf_bits, bytes token):
    cdef unsigned char buf[BUF]
    cdef Py_ssize_t depth = PyBytes_GET_SIZE(leaf_bits)
    cdef Py_ssize_t n = PyBytes_GET_SIZE(token)
    cdef Py_ssize_t i
    cdef size_t off
    out = []
    for i in range(depth + 1):
        off = _layout(buf, tag, leaf_bits, i)
        if off + n > BUF:
            raise ValueError("token too long for kernel buffer")
        memcpy(buf + off, PyBytes_AS_STRING(token), n)
        out.append(_digest(buf, off + n))
    return out


def surviving(set entries, bytes tag, bytes bits, list tokens, list alive):
    cdef unsigned char buf[BUF]
    cdef size_t off = _layout(buf, tag, bits, PyBytes_GET_SIZE(bits))
    cdef bytes tok
    cdef Py_ssize_t n
    out = []
    for i in alive:
        tok = <bytes>tokens[i]
        n = PyBytes_GET_SIZE(tok)
        if off + n > BUF:
            raise ValueError("token too long for kernel buffer")
        memcpy(buf + off, PyBytes_AS_STRING(tok), n)
        if _digest(buf, off + n) in entries:
            out.append(i)
    return out
