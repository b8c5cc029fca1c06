"""``spritz`` command line: keystream export, file encryption, hashing, battery."""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import modes
from .battery import (GENERATORS, WEAK, BatteryConfig, ConfigError, EntropyError,
                      run_battery)
from .battery import random_key as draw_key
from .report import load_report, render_table, report_to_dict, report_to_json
from .state import SpritzState, StateFormatError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

CHUNK = 1 << 16


class IOFailure(click.ClickException):
    exit_code = EXIT_IO


def _hex(value: str | None, what: str) -> bytes | None:
    if value is None:
        return None
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise click.BadParameter(f"not valid hex: {value!r}", param_hint=what) from None


def _read(path: str) -> bytes:
    try:
        if path == "-":
            return sys.stdin.buffer.read()
        return Path(path).read_bytes()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def _open_out(path: str):
    if path == "-":
        return sys.stdout.buffer
    try:
        return open(path, "wb")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write(path: str, data: bytes) -> None:
    fh = _open_out(path)
    try:
        fh.write(data)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        if fh is not sys.stdout.buffer:
            fh.close()


def _resolve_key(key_hex, key_file, random_key, required=True) -> bytes | None:
    given = [o for o, v in (("--key-hex", key_hex), ("--key-file", key_file),
                            ("--random-key", random_key)) if v]
    if len(given) > 1:
        raise click.UsageError(f"conflicting key options: {', '.join(given)}")
    if not given:
        if required:
            raise click.UsageError("one of --key-hex, --key-file, --random-key is required")
        return None
    if key_hex is not None:
        key = _hex(key_hex, "--key-hex")
    elif key_file is not None:
        key = _read(key_file)
    else:
        try:
            key = draw_key(32)
        except EntropyError as exc:
            raise click.ClickException(str(exc)) from exc
        click.echo(f"key: {key.hex()}", err=True)
    if not key:
        raise click.UsageError("key must be nonempty")
    return key


def key_options(f):
    f = click.option("--random-key", is_flag=True, help="Fresh 32-byte key from OS entropy (echoed to stderr).")(f)
    f = click.option("--key-file", type=str, help="Read the raw key bytes from a file.")(f)
    f = click.option("--key-hex", type=str, help="Key as hex.")(f)
    return f


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", count=True, help="More logging.")
def main(verbose):
    """Spritz sponge cipher and keystream randomness battery."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@key_options
@click.option("--iv-hex", type=str, help="Absorb a stop symbol and this IV after the key.")
@click.option("-n", "--length", type=int, required=True, help="Number of keystream bytes.")
@click.option("-o", "--output", default="-", show_default=True, help="Output path, - for stdout.")
@click.option("--resume-state", type=str, help="Continue from a saved state instead of a key.")
@click.option("--save-state", type=str, help="Save the state after the last byte, for --resume-state.")
def keystream(key_hex, key_file, random_key, iv_hex, length, output, resume_state, save_state):
    """Write raw keystream bytes with no framing, for external test suites."""
    if length < 1:
        raise click.BadParameter("must be at least 1", param_hint="--length")
    if resume_state:
        if key_hex or key_file or random_key or iv_hex:
            raise click.UsageError("--resume-state cannot be combined with key or IV options")
        try:
            state = SpritzState.from_bytes(_read(resume_state))
        except StateFormatError as exc:
            raise click.UsageError(f"bad state file: {exc}") from exc
    else:
        key = _resolve_key(key_hex, key_file, random_key)
        state = modes.key_setup(key)
        iv = _hex(iv_hex, "--iv-hex")
        if iv is not None:
            state.absorb_stop()
            state.absorb(iv)
    fh = _open_out(output)
    try:
        remaining = length
        while remaining:
            n = min(CHUNK, remaining)
            fh.write(state.squeeze(n))
            remaining -= n
        fh.flush()
    except OSError as exc:
        raise IOFailure(f"cannot write {output}: {exc.strerror or exc}") from exc
    finally:
        if fh is not sys.stdout.buffer:
            fh.close()
    if save_state:
        _write(save_state, state.to_bytes())


def _crypt(direction, key_hex, key_file, random_key, iv_hex, src, dst):
    key = _resolve_key(key_hex, key_file, random_key)
    iv = _hex(iv_hex, "--iv-hex")
    data = _read(src)
    if iv is None:
        out = (modes.encrypt if direction > 0 else modes.decrypt)(key, data)
    else:
        out = (modes.encrypt_with_iv if direction > 0 else modes.decrypt_with_iv)(key, iv, data)
    _write(dst, out)


@main.command()
@key_options
@click.option("--iv-hex", type=str, help="Initialization value as hex.")
@click.argument("src")
@click.argument("dst")
def encrypt(key_hex, key_file, random_key, iv_hex, src, dst):
    """Encrypt SRC into DST (either may be -)."""
    _crypt(+1, key_hex, key_file, random_key, iv_hex, src, dst)


@main.command()
@key_options
@click.option("--iv-hex", type=str, help="Initialization value as hex.")
@click.argument("src")
@click.argument("dst")
def decrypt(key_hex, key_file, random_key, iv_hex, src, dst):
    """Decrypt SRC into DST (either may be -)."""
    _crypt(-1, key_hex, key_file, random_key, iv_hex, src, dst)


@main.command("hash")
@click.option("-r", "--length", "r", type=int, default=32, show_default=True, help="Digest length in bytes.")
@click.argument("src", default="-")
def hash_cmd(r, src):
    """Print the hex Spritz digest of SRC."""
    if r < 1:
        raise click.BadParameter("must be at least 1", param_hint="--length")
    click.echo(modes.hash(_read(src), r).hex())


@main.command()
@click.option("--streams", type=int, default=1024, show_default=True)
@click.option("--stream-bits", type=int, default=1 << 25, show_default=True)
@click.option("--psamples", type=int, default=100, show_default=True)
@click.option("--seed", type=str, help="Hex master seed; keys are derived from it (reproducible).")
@click.option("--generator", type=click.Choice(GENERATORS), default="spritz", show_default=True,
              help="zero and counter are known-bad sources for checking the harness.")
@click.option("--key-length", type=int, default=32, show_default=True)
@click.option("--weak", type=(float, float), default=(0.005, 0.995), show_default=True)
@click.option("--fail", type=(float, float), default=(1e-6, 1 - 1e-6), show_default=True)
@click.option("--threads", type=int, help="Worker threads (default: SPRITZ_THREADS or CPU count).")
@click.option("--json", "json_path", default="battery.json", show_default=True, help="Structured report path.")
@click.option("--text", "text_path", default="battery.txt", show_default=True, help="Text table path.")
@click.option("--no-timing", is_flag=True, help="Leave timings out of the JSON report.")
@click.option("-q", "--quiet", is_flag=True, help="Do not print rows as they finish.")
def battery(streams, stream_bits, psamples, seed, generator, key_length, weak, fail, threads,
            json_path, text_path, no_timing, quiet):
    """Run the randomness battery over a keystream corpus.

    Exits 0 unless some final row is Failed.
    """
    config = BatteryConfig(
        streams=streams, stream_bits=stream_bits, psamples=psamples, weak=tuple(weak),
        fail=tuple(fail), key_length=key_length, seed=_hex(seed, "--seed"),
        generator=generator, threads=threads,
    )
    try:
        config.validate()
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc

    def show(row):
        if not quiet:
            tag = " (rerun)" if row.rerun else ""
            click.echo(f"{row.test:<17} {row.tuple:>2} {row.psamples:>5} {row.p_value:.8f} "
                       f"{row.result}{tag}", err=True)

    try:
        report = run_battery(config, progress=show)
    except (ConfigError, EntropyError) as exc:
        raise click.ClickException(str(exc)) from exc
    doc = report_to_dict(report, timing=not no_timing)
    table = render_table(doc)
    _write(json_path, report_to_json(report, timing=not no_timing).encode())
    _write(text_path, table.encode())
    click.echo(table, nl=False)
    if report.failed:
        sys.exit(EXIT_FAILED)
    if any(r.result == WEAK for r in report.rows):
        click.echo("warning: Weak rows remain after rerun", err=True)


@main.command()
@click.argument("src")
@click.option("--audit", is_flag=True, help="List every run, reruns included.")
def report(src, audit):
    """Render a saved JSON battery report as a text table."""
    try:
        doc = load_report(_read(src).decode())
    except ValueError as exc:
        raise click.UsageError(f"{src}: {exc}") from exc
    click.echo(render_table(doc, audit=audit), nl=False)
    sys.exit(EXIT_FAILED if doc["verdict"] == "Failed" else EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    main()
