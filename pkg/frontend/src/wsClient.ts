// WebSocket plumbing: an ordered stream of server documents in, frontend
// events out. On a detected delta gap the connection is reopened, which
// makes the server push a full tree again.

import { FrontendEvent, ServerDoc } from "./types.js";

export interface WsHandlers {
  onDoc: (doc: ServerDoc) => void;
  onStatus: (connected: boolean) => void;
}

export class WsClient {
  private socket: WebSocket | null = null;

  constructor(private url: string, private handlers: WsHandlers) {}

  connect(): void {
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => this.handlers.onStatus(true);
    socket.onclose = () => {
      this.handlers.onStatus(false);
      setTimeout(() => this.connect(), 1000);
    };
    socket.onmessage = (msg) => {
      this.handlers.onDoc(JSON.parse(String(msg.data)) as ServerDoc);
    };
  }

  send(event: FrontendEvent): void {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(event));
    }
  }

  resync(): void {
    this.send({ type: "resync" });
  }
}
