"""
webapp.py - JSON API over the same handlers as the CLI

Run:
    python -m subgrowth serve --host 127.0.0.1 --port 8050

Every route answers with a result envelope. Bad parameters give 400,
resource limits and failed Bombieri scans give 422, each with an "error" key.
"""

from __future__ import annotations

import logging
from argparse import Namespace
from typing import Any, Callable, Optional

from flask import Flask, jsonify, request

from . import cli
from .config import RunConfig, load_config, save_config
from .envelope import ResultEnvelope, Timer, error_envelope
from .errors import InvalidArgument, NoBombieriPrime, ResourceLimitExceeded, SubgrowthError

LOG = logging.getLogger("subgrowth.webapp")


def _param(name: str, cast: Callable[[str], Any], default: Any = None, required: bool = True) -> Any:
    raw = request.args.get(name)
    if raw is None or raw == "":
        if required and default is None:
            raise InvalidArgument(f"missing query parameter '{name}'")
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as e:
        raise InvalidArgument(f"bad value for '{name}': {raw!r}") from e


def create_app(config: Optional[RunConfig] = None) -> Flask:
    app = Flask(__name__)
    app.config["RUN_CONFIG"] = config or load_config()

    def run(command: str, handler: cli.Handler, build: Callable[[], Namespace]):
        cfg: RunConfig = app.config["RUN_CONFIG"]
        try:
            args = build()
            with Timer() as timer:
                outputs, provenance = handler(args, cfg)
            env = ResultEnvelope(
                command=command, inputs=cli.envelope_inputs(args), outputs=outputs, provenance=provenance, timing_ms=timer.ms
            )
            return jsonify(env.to_dict())
        except InvalidArgument as e:
            return jsonify(error_envelope(command, dict(request.args), e).to_dict()), 400
        except (ResourceLimitExceeded, NoBombieriPrime) as e:
            return jsonify(error_envelope(command, dict(request.args), e).to_dict()), 422
        except SubgrowthError as e:
            return jsonify(error_envelope(command, dict(request.args), e).to_dict()), 400

    @app.route("/api/health")
    def health():
        return jsonify({"ok": True, "config": app.config["RUN_CONFIG"].to_dict()})

    @app.route("/api/extremal/gamma")
    def extremal_gamma():
        return run("extremal gamma", cli.HANDLERS["extremal gamma"], lambda: Namespace(R=_param("R", float)))

    @app.route("/api/extremal/mn")
    def extremal_mn():
        def build():
            problem = _param("problem", str, default="m2")
            if problem not in ("m1", "m2"):
                raise InvalidArgument("problem must be m1 or m2")
            return Namespace(n=_param("n", int), problem=problem)

        return run("extremal mn", cli.HANDLERS["extremal mn"], build)

    @app.route("/api/abelian/count")
    def abelian_count():
        return run(
            "abelian count",
            cli.HANDLERS["abelian count"],
            lambda: Namespace(
                orders=_param("orders", str),
                max_order=_param("max_order", int, required=False),
                max_index=_param("max_index", int, required=False),
                brute_force=False,
            ),
        )

    @app.route("/api/bombieri/certify")
    def bombieri_certify():
        return run(
            "bombieri certify", cli.HANDLERS["bombieri certify"], lambda: Namespace(x=_param("x", int), q=_param("q", int))
        )

    @app.route("/api/congruence/gamma-n")
    def congruence_gamma_n():
        return run(
            "congruence gamma-n",
            cli.HANDLERS["congruence gamma-n"],
            lambda: Namespace(n=_param("n", int), level_truncated=False),
        )

    @app.route("/api/config", methods=["GET", "POST"])
    def api_config():
        if request.method == "GET":
            return jsonify(app.config["RUN_CONFIG"].to_dict())
        try:
            payload = request.get_json(force=True, silent=True)
            if not isinstance(payload, dict):
                return jsonify({"error": "expected a JSON object"}), 400
            cfg: RunConfig = app.config["RUN_CONFIG"]
            unknown = set(payload) - set(cfg.to_dict())
            if unknown:
                return jsonify({"error": f"unknown settings: {sorted(unknown)}"}), 400
            updated = cfg.with_overrides(**payload)
            path = save_config(updated)
            app.config["RUN_CONFIG"] = updated
            LOG.info("Settings updated via API: %s", sorted(payload))
            return jsonify({"ok": True, "settings": updated.to_dict(), "path": str(path)})
        except (ValueError, TypeError) as e:
            return jsonify({"error": str(e)}), 400

    return app
