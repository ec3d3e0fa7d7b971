"""Keyed and unkeyed hash primitives plus document encryption.

All multi-part inputs are joined with a single 0x1F byte so that, e.g., the
paths "0"+"01" and "00"+"1" never produce the same hash input.
"""
from __future__ import annotations

import hashlib
import hmac
import os
import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from dvfs.errors import ContractViolation, DecryptionError

SEP = b"\x1f"
KEY_BYTES = 32
PRF_BYTES = 32
H1_BYTES = 64
NONCE_BYTES = 12
TAG_BYTES = 16
CIPHERTEXT_OVERHEAD = NONCE_BYTES + TAG_BYTES

# PRF domain tags
TAG_TOKEN = "tok"
TAG_DIGEST = "dig"
TAG_ENC = "enc"


@dataclass(frozen=True)
class MasterKey:
    key_bytes: bytes

    def __post_init__(self):
        if not isinstance(self.key_bytes, bytes) or len(self.key_bytes) != KEY_BYTES:
            raise ContractViolation(f"master key must be {KEY_BYTES} bytes")

    @classmethod
    def generate(cls) -> "MasterKey":
        return cls(secrets.token_bytes(KEY_BYTES))

    @classmethod
    def from_hex(cls, text: str) -> "MasterKey":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise ContractViolation("master key is not valid hex") from exc
        return cls(raw)

    def hex(self) -> str:
        return self.key_bytes.hex()

    def __repr__(self) -> str:
        return "MasterKey(<redacted>)"


@dataclass(frozen=True)
class Ciphertext:
    doc_id: int
    body: bytes


def join(*parts: bytes) -> bytes:
    return SEP.join(parts)


def prf(key: MasterKey, domain_tag: str, message: bytes) -> bytes:
    """HMAC-SHA256 keyed by ``key`` over ``domain_tag || 0x1F || message``."""
    if not message:
        raise ContractViolation("prf message must be non-empty")
    return hmac.new(key.key_bytes, domain_tag.encode("ascii") + SEP + message, hashlib.sha256).digest()


def hash_h1(message: bytes) -> bytes:
    return hashlib.sha512(message).digest()


def _check_token(t: bytes) -> None:
    if len(t) != PRF_BYTES:
        raise ContractViolation(f"expected a {PRF_BYTES}-byte token, got {len(t)} bytes")


def hash_h2(t: bytes) -> bytes:
    _check_token(t)
    return hashlib.sha256(b"\x02" + t).digest()


def hash_h3(t: bytes) -> bytes:
    _check_token(t)
    return hashlib.sha256(b"\x03" + t).digest()


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ContractViolation("xor operands differ in length")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def _data_key(key: MasterKey) -> bytes:
    return prf(key, TAG_ENC, b"document-data-key")


def _aad(doc_id: int) -> bytes:
    return b"doc:" + str(doc_id).encode("ascii")


def encrypt_doc(key: MasterKey, doc_id: int, plaintext: bytes) -> Ciphertext:
    """AES-256-GCM with a fresh random nonce; the doc id is bound as associated data."""
    if not plaintext:
        raise ContractViolation("plaintext must be non-empty")
    nonce = os.urandom(NONCE_BYTES)
    body = nonce + AESGCM(_data_key(key)).encrypt(nonce, plaintext, _aad(doc_id))
    return Ciphertext(doc_id, body)


def decrypt_doc(key: MasterKey, ct: Ciphertext) -> bytes:
    if len(ct.body) < CIPHERTEXT_OVERHEAD:
        raise DecryptionError("ciphertext body too short")
    nonce, payload = ct.body[:NONCE_BYTES], ct.body[NONCE_BYTES:]
    try:
        return AESGCM(_data_key(key)).decrypt(nonce, payload, _aad(ct.doc_id))
    except InvalidTag as exc:
        raise DecryptionError(f"authentication failed for document {ct.doc_id}") from exc
