"""URL canonicalization and the offline shortened-link expansion map.

Canonical identity is what makes two shares of "the same link" comparable,
so the rules here are deliberately conservative: per-share tracking noise is
stripped, everything else (including path case) is preserved.
"""

from __future__ import annotations

import logging
import re
from urllib.parse import parse_qsl, quote, urlencode, urlsplit, urlunsplit

from .models import CanonicalUrl

log = logging.getLogger(__name__)

# Query parameters that vary per share and would break co-sharing identity.
DEFAULT_TRACKING_PARAMS = frozenset({"fbclid", "gclid", "igshid", "ref_src", "s", "t"})
TRACKING_PREFIXES = ("utm_",)

# "host.tld/..." without a scheme; used to accept scheme-less inputs.
_BARE_HOST_RE = re.compile(r"^[a-z0-9][a-z0-9.-]*\.[a-z]{2,}(?::\d+)?(?:[/?#]|$)", re.IGNORECASE)


def is_tracking_param(name: str, extra: frozenset[str] | None = None) -> bool:
    lowered = name.lower()
    if lowered.startswith(TRACKING_PREFIXES):
        return True
    tracked = DEFAULT_TRACKING_PARAMS if extra is None else extra
    return lowered in tracked


def canonicalize_url(raw: str, tracking_params: frozenset[str] | None = None) -> CanonicalUrl | None:
    """Normalize *raw* into a CanonicalUrl, or None when no host can be parsed.

    Applied in order: trim, lowercase scheme and host, strip a leading
    "www.", drop the fragment, drop tracking query parameters, sort the
    remaining parameters by name, drop a trailing slash from the path.
    Scheme-less inputs that look like "host.tld/..." are assumed https.
    """
    text = raw.strip()
    if not text:
        return None
    if "://" not in text and _BARE_HOST_RE.match(text):
        text = "https://" + text
    try:
        parts = urlsplit(text)
    except ValueError:
        return None
    host = parts.netloc.lower()
    if host.startswith("www."):
        host = host[4:]
    if not host or "." not in host.strip(":0123456789"):
        return None
    if " " in host:
        return None

    scheme = parts.scheme.lower()
    if scheme not in ("http", "https", "ftp"):
        return None

    pairs = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not is_tracking_param(k, tracking_params)
    ]
    query = urlencode(sorted(pairs))
    path = parts.path
    if path.endswith("/"):
        path = path.rstrip("/")
    # Re-quote so unsafe characters cannot survive a round trip.
    path = quote(path, safe="/%:@~!$&'()*+,;=-._")

    full = urlunsplit((scheme, host, path, query, ""))
    domain = host.rsplit(":", 1)[0] if ":" in host and host.rsplit(":", 1)[1].isdigit() else host
    return CanonicalUrl(full=full, registered_domain=domain)


class ExpansionMap:
    """Offline substitute for resolving shortened links.

    Loaded from a two-column TSV of (short, expanded); lookups are keyed by
    the canonical form of the short URL. Expanded values that fail
    canonicalization leave the original URL in place and bump `warnings`.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self._raw: dict[str, str] = {}
        self._resolved: dict[str, CanonicalUrl | None] = {}
        self.warnings = 0
        for short, expanded in (entries or {}).items():
            self.add(short, expanded)

    def add(self, short: str, expanded: str) -> None:
        key = canonicalize_url(short)
        if key is None:
            log.warning("expansion map: unusable short URL %r", short)
            self.warnings += 1
            return
        self._raw[key.full] = expanded

    @classmethod
    def from_file(cls, path: str) -> "ExpansionMap":
        mapping = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) < 2:
                    cols = line.split(None, 1)
                if len(cols) < 2:
                    mapping.warnings += 1
                    continue
                mapping.add(cols[0].strip(), cols[1].strip())
        return mapping

    def __len__(self) -> int:
        return len(self._raw)

    def apply(self, url: CanonicalUrl) -> CanonicalUrl:
        """Return the expanded canonical URL, or *url* unchanged."""
        if url.full not in self._raw:
            return url
        if url.full not in self._resolved:
            target = canonicalize_url(self._raw[url.full])
            if target is None:
                log.warning("expansion map: target of %s does not canonicalize", url.full)
                self.warnings += 1
            self._resolved[url.full] = target
        resolved = self._resolved[url.full]
        return url if resolved is None else resolved
