"""Signed-header authentication stub.

Identity federation is out of scope; what matters downstream is that every
request resolves to a fixed Principal whose role scopes broker decisions.
Clients send X-Hunt-User plus X-Hunt-Signature = HMAC-SHA256(secret, user id).
"""

import hashlib
import hmac

from ..broker import Principal

DEFAULT_SECRET = "dev-secret-not-for-production"

PRINCIPAL_ROLES = {
    "u-analyst": "analyst",
    "u-hunter": "senior_hunter",
    "u-manager": "soc_manager",
    "u-engineer": "detection_engineer",
}

USER_HEADER = "x-hunt-user"
SIGNATURE_HEADER = "x-hunt-signature"


class AuthError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


def sign(secret: str, user_id: str) -> str:
    return hmac.new(secret.encode("utf-8"), user_id.encode("utf-8"), hashlib.sha256).hexdigest()


def authenticate(headers, secret: str, policy) -> Principal:
    user_id = headers.get(USER_HEADER)
    signature = headers.get(SIGNATURE_HEADER)
    if not user_id or not signature:
        raise AuthError(401, "missing auth headers")
    if not hmac.compare_digest(signature, sign(secret, user_id)):
        raise AuthError(401, "bad signature")
    role = PRINCIPAL_ROLES.get(user_id)
    if role is None:
        raise AuthError(403, f"unknown principal {user_id}")
    return Principal.for_role(user_id, role, policy)
