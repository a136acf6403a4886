// Thin fetch-based client for the inspector's HTTP bridge (POST /api).

import { Command, CommandName, Response } from "./protocol.js";

export class InspectorClient {
  private nextId = 1;
  private endpoint: string;

  constructor(endpoint: string = "/api") {
    this.endpoint = endpoint;
  }

  async send<P>(cmd: CommandName, args: Record<string, unknown> = {}): Promise<P> {
    const request: Command = { id: this.nextId++, cmd, args };
    const response = await fetch(this.endpoint, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    const body = (await response.json()) as Response<P>;
    if (!body.ok || body.payload === undefined) {
      const err = body.error ?? { type: "TransportError", message: "no payload" };
      throw new Error(`${err.type}: ${err.message}`);
    }
    return body.payload;
  }
}
