// Client-side active-time counter. Pauses while the tab is hidden; the
// server's own timing stays authoritative, this value rides along with the
// saved annotation.

export class ActivityTimer {
  private activeMs = 0;
  private startedAt: number | null = null;

  constructor(private readonly now: () => number = () => Date.now()) {}

  start(): void {
    if (this.startedAt === null) {
      this.startedAt = this.now();
    }
  }

  pause(): void {
    if (this.startedAt !== null) {
      this.activeMs += this.now() - this.startedAt;
      this.startedAt = null;
    }
  }

  reset(): void {
    this.activeMs = 0;
    this.startedAt = null;
  }

  get elapsedMs(): number {
    const running = this.startedAt === null ? 0 : this.now() - this.startedAt;
    return this.activeMs + running;
  }

  bindVisibility(doc: Document): void {
    doc.addEventListener("visibilitychange", () => {
      if (doc.visibilityState === "hidden") {
        this.pause();
      } else {
        this.start();
      }
    });
  }
}
