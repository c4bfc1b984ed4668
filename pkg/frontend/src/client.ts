// Thin document client: gestures out, refresh signals in.
//
// The client holds no document state of its own — the server's /view
// endpoint is the single source of truth and `op` frames merely signal
// that a refresh is due. Killing this client mid-session can therefore
// never lose document state: it only ever emitted intents.

import { Frame, decodeFrame, encodeFrame } from './protocol.js';
import { Gesture, IntentPayload, gestureToIntent } from './gestures.js';

export interface WsLike {
	send(data: string): void;
	close(): void;
}

export interface IntentResult {
	reqId: number;
	ok: boolean;
	result?: Record<string, unknown>;
	error?: string;
	message?: string;
}

export interface Popup {
	linkId: string;
	from: string;
	message: string | null;
	createdAt: number;
}

export interface TraceRecord {
	intent: string;
	args: Record<string, unknown>;
}

export class DocClient {
	readonly trace: TraceRecord[] = [];
	readonly popups: Popup[] = [];
	readonly highlights: Record<string, unknown>[] = [];
	readonly presences = new Map<string, Record<string, unknown>>();
	onRefresh: (() => void) | null = null;
	onPopup: ((p: Popup) => void) | null = null;
	private pending = new Map<number, (r: IntentResult) => void>();
	private reqCounter = 0;
	private closed = false;

	constructor(
		private readonly ws: WsLike,
		readonly docId: string,
		readonly actor: string
	) {}

	hello(frontier: Record<string, number> = {}): void {
		this.ws.send(
			encodeFrame({ type: 'hello', docId: this.docId, payload: {}, actor: this.actor, frontier })
		);
	}

	gesture(g: Gesture): Promise<IntentResult> {
		const payload: IntentPayload = gestureToIntent(g, ++this.reqCounter);
		this.trace.push({ intent: payload.intent, args: payload.args });
		const promise = new Promise<IntentResult>((resolve) => {
			this.pending.set(payload.reqId, resolve);
		});
		this.ws.send(
			encodeFrame({
				type: 'intent',
				docId: this.docId,
				payload: payload as unknown as Record<string, unknown>,
				actor: this.actor
			})
		);
		return promise;
	}

	sendPresence(cursor: [string, number] | null, selection: [string, number, number] | null): void {
		this.ws.send(
			encodeFrame({
				type: 'presence',
				docId: this.docId,
				payload: { cursor, selection, online: true },
				actor: this.actor
			})
		);
	}

	onMessage(text: string): void {
		const frame: Frame = decodeFrame(text);
		switch (frame.type) {
			case 'op':
			case 'ack':
				this.onRefresh?.();
				break;
			case 'catchup-bundle': {
				const popups = (frame.payload.popups as Popup[]) ?? [];
				for (const p of popups) {
					this.popups.push(p);
					this.onPopup?.(p);
				}
				const highlights = (frame.payload.highlights as Record<string, unknown>[]) ?? [];
				this.highlights.push(...highlights);
				this.onRefresh?.();
				break;
			}
			case 'popup': {
				const p = frame.payload as unknown as Popup;
				this.popups.push(p);
				this.onPopup?.(p);
				break;
			}
			case 'presence':
				if (frame.actor) {
					this.presences.set(frame.actor, frame.payload);
					this.onRefresh?.();
				}
				break;
			case 'intent-result': {
				const result = frame.payload as unknown as IntentResult;
				const resolve = this.pending.get(result.reqId);
				if (resolve) {
					this.pending.delete(result.reqId);
					resolve(result);
				}
				break;
			}
			default:
				break;
		}
	}

	// Teardown sends nothing: there is no client-held state to flush.
	teardown(): void {
		if (!this.closed) {
			this.closed = true;
			this.ws.close();
		}
	}
}
