from datetime import UTC, datetime
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from common.files import write_json

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """Written next to the outputs of every run."""

    model_config = ConfigDict(frozen=True)

    command: str
    config_digest: str = Field(pattern=r"^[0-9a-f]{64}$")
    timestamp: str
    output_paths: tuple[str, ...] = ()

    @staticmethod
    def create(command: str, config_digest: str, output_paths: list[Path]) -> "RunManifest":
        return RunManifest(
            command=command,
            config_digest=config_digest,
            timestamp=datetime.now(UTC).isoformat(timespec="seconds"),
            output_paths=tuple(sorted(path.as_posix() for path in output_paths)),
        )

    def write(self, out_dir: Path) -> Path:
        return write_json(out_dir / MANIFEST_NAME, self)
